import numpy as np
import pytest

from somn.edf import parse_edf, write_edf
from somn.errors import EdfParseError, EdfRangeError
from somn.recording import ChannelSignal, Recording

from conftest import make_recording


def build_edf_bytes(digital_samples, phys_range=(-3276.8, 3276.7),
                    dig_range=(-32768, 32767), spr=None, n_records=None,
                    version=b"0       ", header_bytes=None, label="F3-M2"):
    """Hand-built single-signal EDF, independent of write_edf."""
    samples = np.asarray(digital_samples, dtype="<i2")
    spr = spr or len(samples)
    n_records = n_records if n_records is not None else len(samples) // spr

    def fx(text, width):
        return text.encode("ascii").ljust(width)

    hb = header_bytes if header_bytes is not None else 256 + 256
    head = b"".join([
        version,
        fx("patient", 80), fx("recording", 80),
        fx("01.01.00", 8), fx("00.00.00", 8),
        fx(str(hb), 8), fx("", 44),
        fx(str(n_records), 8), fx("1", 8), fx("1", 4),
    ])
    sig = b"".join([
        fx(label, 16), fx("", 80), fx("uV", 8),
        fx(str(phys_range[0]), 8), fx(str(phys_range[1]), 8),
        fx(str(dig_range[0]), 8), fx(str(dig_range[1]), 8),
        fx("", 80), fx(str(spr), 8), fx("", 32),
    ])
    return head + sig + samples.tobytes()


def test_scaling_formula_hand_applied():
    # digital 10 with the canonical 16-bit range maps to 1.0 uV
    data = build_edf_bytes([10] * 200)
    rec = parse_edf(data)
    lsb = (3276.7 - -3276.8) / (32767 - -32768)
    assert abs(rec.channels[0].samples[0] - 1.0) <= lsb


def test_roundtrip_byte_identity():
    rng = np.random.default_rng(1)
    rec = make_recording({
        "F3-M2": rng.uniform(-100, 100, 1200),
        "C3-M2": rng.uniform(-100, 100, 1200),
    })
    b = write_edf(rec)
    assert write_edf(parse_edf(b)) == b


def test_roundtrip_samples_within_quantization():
    rng = np.random.default_rng(2)
    original = rng.uniform(-3000, 3000, 600)
    rec = make_recording({"F3-M2": original})
    parsed = parse_edf(write_edf(rec))
    gain = (3276.7 - -3276.8) / (32767 - -32768)
    assert np.abs(parsed.channels[0].samples - original).max() <= gain / 2 + 1e-9


def test_unsupported_version():
    data = build_edf_bytes([0] * 200, version=b"1       ")
    with pytest.raises(EdfParseError, match="unsupported version"):
        parse_edf(data)
    try:
        parse_edf(data)
    except EdfParseError as e:
        assert e.offset == 0


def test_degenerate_digital_range():
    data = build_edf_bytes([0] * 200, dig_range=(5, 5))
    with pytest.raises(EdfParseError, match="digital min"):
        parse_edf(data)


def test_malformed_header_length():
    data = build_edf_bytes([0] * 200, header_bytes=9999)
    with pytest.raises(EdfParseError, match="malformed header length"):
        parse_edf(data)


def test_inconsistent_record_sizes():
    data = build_edf_bytes([0] * 200, n_records=3)  # claims 3 records, has 1
    with pytest.raises(EdfParseError, match="inconsistent record sizes"):
        parse_edf(data)


def test_truncated_header():
    with pytest.raises(EdfParseError, match="too short"):
        parse_edf(b"0       " + b"x" * 50)


def test_zero_recording_digital_midpoint():
    rec = Recording(id="zeros", channels=[ChannelSignal(
        label="F3-M2", samples=np.zeros(6000), sample_rate_hz=200.0,
        physical_range=(-3276.7, 3276.7), digital_range=(-32767, 32767))])
    b = write_edf(rec)
    parsed_digital = np.frombuffer(b, dtype="<i2", offset=512)
    midpoint = (-32767 + 32767) // 2
    assert (parsed_digital == midpoint).all()


def test_out_of_range_sample_rejected():
    rec = Recording(id="hot", channels=[ChannelSignal(
        label="F3-M2", samples=np.array([3276.7 + 1.0] + [0.0] * 199),
        sample_rate_hz=200.0)])
    with pytest.raises(EdfRangeError, match="outside physical range"):
        write_edf(rec)


def test_partial_record_rejected_on_write():
    rec = make_recording({"F3-M2": np.zeros(250)})  # 1.25 records at 1 s/record
    with pytest.raises(EdfRangeError, match="whole"):
        write_edf(rec)


def test_multichannel_rates_preserved():
    rng = np.random.default_rng(3)
    rec = Recording(id="mixed", channels=[
        ChannelSignal(label="F3-M2", samples=rng.uniform(-10, 10, 400), sample_rate_hz=200.0),
        ChannelSignal(label="resp", samples=rng.uniform(-10, 10, 50), sample_rate_hz=25.0),
    ])
    parsed = parse_edf(write_edf(rec))
    assert parsed.channels[0].sample_rate_hz == 200.0
    assert parsed.channels[1].sample_rate_hz == 25.0
    assert len(parsed.channels[1].samples) == 50
