import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecgauth.errors import EmptyInput, MalformedHeader, ParseError, TruncatedInput, UnsupportedFormat
from ecgauth.ingest import (
    EcgRecord,
    Source,
    decode_212,
    encode_212,
    load_record,
    read_csv,
    read_wfdb,
    write_csv,
    write_wfdb,
)


@pytest.mark.parametrize(
    "data, expected",
    [
        ([0xE8, 0x03, 0x7D], [1000, 125]),
        ([0xFF, 0xFF, 0xFF], [-1, -1]),
        ([0x00, 0x00, 0x00], [0, 0]),
    ],
)
def test_decode_212_examples(data, expected):
    assert decode_212(bytes(data), 2).tolist() == expected


def test_decode_212_odd_count_uses_half_triple():
    assert decode_212(bytes([0xE8, 0x03]), 1).tolist() == [1000]


def test_decode_212_truncated():
    with pytest.raises(TruncatedInput):
        decode_212(bytes([1, 2]), 2)
    assert decode_212(b"", 0).tolist() == []


def test_212_round_trip_corners_and_random():
    corners = [(-2048, -2048), (-2048, 2047), (2047, -2048), (2047, 2047)]
    rng = np.random.default_rng(212)
    pairs = np.vstack([np.array(corners), rng.integers(-2048, 2048, size=(20_000, 2))])
    flat = pairs.ravel()
    assert np.array_equal(decode_212(encode_212(flat), flat.size), flat)


@given(st.lists(st.integers(-2048, 2047), max_size=301))
def test_212_round_trip_property(values):
    assert decode_212(encode_212(values), len(values)).tolist() == values


def test_encode_212_rejects_out_of_range():
    with pytest.raises(ValueError):
        encode_212([2048])


def test_read_wfdb_mitbih_style_header(tmp_path):
    # two interleaved channels as in MIT-BIH; channel 0 is returned
    rng = np.random.default_rng(0)
    ch0 = rng.integers(800, 1300, 1000)
    ch1 = rng.integers(800, 1300, 1000)
    hea = write_wfdb(tmp_path, "100", [ch0, ch1], 360, gain=200, baseline=1024)
    rec = read_wfdb(hea)
    assert rec.fs_hz == 360
    assert rec.source is Source.WFDB212
    assert len(rec) == 1000
    np.testing.assert_allclose(rec.samples, (ch0 - 1024) / 200.0, atol=0)


def test_read_wfdb_real_header_text(tmp_path):
    (tmp_path / "100.dat").write_bytes(encode_212([995, 1011, 1024, 1024, 1030, 1000]))
    (tmp_path / "100.hea").write_text(
        "100 2 360 3\n"
        "100.dat 212 200 11 1024 995 -22131 0 MLII\n"
        "100.dat 212 200 11 1024 1011 20052 0 V5\n"
        "# 69 M 1085 1629 x1\n"
    )
    rec = read_wfdb(tmp_path / "100.hea")
    assert rec.fs_hz == 360
    np.testing.assert_allclose(rec.samples, [(995 - 1024) / 200, 0.0, (1030 - 1024) / 200])


def test_read_wfdb_baseline_sample_is_zero(tmp_path):
    hea = write_wfdb(tmp_path, "z", [[1024, 1024, 1100]], 250, gain=100, baseline=1024)
    rec = read_wfdb(hea)
    assert rec.samples[0] == 0.0
    assert rec.fs_hz == 250


def test_read_wfdb_uses_parenthesised_baseline(tmp_path):
    (tmp_path / "b.dat").write_bytes(encode_212([10, 20]))
    (tmp_path / "b.hea").write_text("b 1 500 2\nb.dat 212 100(10)/mV 12 0 10 0 0 I\n")
    np.testing.assert_allclose(read_wfdb(tmp_path / "b.hea").samples, [0.0, 0.1])


def test_read_wfdb_unsupported_format(tmp_path):
    (tmp_path / "f.dat").write_bytes(b"\x00" * 8)
    (tmp_path / "f.hea").write_text("f 1 360 4\nf.dat 16 200 16 0 0 0 0 x\n")
    with pytest.raises(UnsupportedFormat):
        read_wfdb(tmp_path / "f.hea")


@pytest.mark.parametrize(
    "text",
    ["", "rec 1\n", "rec one 360 10\nrec.dat 212 200 11 0\n", "rec 1 360 10\n",
     "rec 1 360 10\nrec.dat banana 200 11 0\n", "rec 1 360 10\nrec.dat 212 200 11 zero\n"],
)
def test_read_wfdb_malformed(tmp_path, text):
    (tmp_path / "rec.hea").write_text(text)
    (tmp_path / "rec.dat").write_bytes(b"\x00" * 15)
    with pytest.raises(MalformedHeader):
        read_wfdb(tmp_path / "rec.hea")


def test_read_wfdb_length_matches_header(tmp_path):
    hea = write_wfdb(tmp_path, "odd", [np.arange(777) % 2000], 360)
    assert len(read_wfdb(hea)) == 777


def test_read_wfdb_truncated_signal_file(tmp_path):
    hea = write_wfdb(tmp_path, "t", [np.zeros(100)], 360)
    (tmp_path / "t.dat").write_bytes(b"\x00" * 10)
    with pytest.raises(TruncatedInput):
        read_wfdb(hea)


def test_read_csv_basic(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("0.0\n0.1\n")
    rec = read_csv(p, 360)
    assert rec.samples.tolist() == [0.0, 0.1]
    assert rec.source is Source.CSV


def test_read_csv_ignores_second_column(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("1.5,99\n-2,7\n")
    assert read_csv(p, 360).samples.tolist() == [1.5, -2.0]


def test_read_csv_empty(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("")
    with pytest.raises(EmptyInput):
        read_csv(p, 360)


def test_read_csv_parse_error_line_number(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("0.1\n0.2\nabc\n")
    with pytest.raises(ParseError) as err:
        read_csv(p, 360)
    assert err.value.line == 3


def test_read_csv_rejects_non_finite(tmp_path):
    p = tmp_path / "n.csv"
    p.write_text("0.1\nnan\n")
    with pytest.raises(ParseError) as err:
        read_csv(p, 360)
    assert err.value.line == 2


@settings(max_examples=50)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=50))
def test_csv_round_trip(tmp_path_factory, values):
    p = tmp_path_factory.mktemp("csv") / "r.csv"
    rec = EcgRecord("r", 360, values)
    write_csv(rec, p)
    back = read_csv(p, 360)
    np.testing.assert_allclose(back.samples, rec.samples, atol=1e-12, rtol=0)


def test_record_invariants():
    with pytest.raises(ValueError):
        EcgRecord("x", 0, [1.0])
    with pytest.raises(ValueError):
        EcgRecord("x", 360, [1.0, float("inf")])
    with pytest.raises(EmptyInput):
        EcgRecord("x", 360, [])


def test_load_record_dispatch(tmp_path):
    hea = write_wfdb(tmp_path, "w", [[1024, 1224]], 360)
    assert load_record(hea).source is Source.WFDB212
    assert load_record(tmp_path / "w").source is Source.WFDB212
    c = tmp_path / "c.csv"
    c.write_text("1\n2\n")
    assert load_record(c, 500).fs_hz == 500
