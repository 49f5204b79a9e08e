"""Node/server wire protocol."""

from .node import NodeOutcome, node_run
from .server import AuthServer, parse_address, serve
from .wire import FrameDecoder, decode, encode

__all__ = ["AuthServer", "FrameDecoder", "NodeOutcome", "decode", "encode", "node_run",
           "parse_address", "serve"]
