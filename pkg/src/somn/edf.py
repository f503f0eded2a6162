"""EDF (European Data Format) reader and writer.

Layout: a 256-byte fixed header, then 256 bytes of header per signal,
then data records of 16-bit little-endian two's-complement samples,
interleaved signal by signal within each record. Physical values are
recovered with

    physical = (digital - dig_min) * (phys_max - phys_min) / (dig_max - dig_min) + phys_min

Parsing retains the original header text fields on the Recording so that
rewriting a file parsed from our own writer is byte-identical.
"""

from __future__ import annotations

import io

import numpy as np

from .errors import EdfParseError, EdfRangeError
from .recording import ChannelSignal, Recording

HEADER_BYTES = 256
SIGNAL_HEADER_BYTES = 256
EDF_VERSION_FIELD = b"0       "

_DEFAULT_RECORD_SECONDS = 1.0


def _ascii(raw: bytes, offset: int, what: str) -> str:
    try:
        return raw.decode("ascii")
    except UnicodeDecodeError as e:
        raise EdfParseError(f"non-ASCII bytes in {what}", offset) from e


def _int_field(raw: bytes, offset: int, what: str) -> int:
    s = _ascii(raw, offset, what).strip()
    try:
        return int(s)
    except ValueError as e:
        raise EdfParseError(f"cannot parse {what} {s!r} as integer", offset) from e


def _float_field(raw: bytes, offset: int, what: str) -> float:
    s = _ascii(raw, offset, what).strip()
    try:
        return float(s)
    except ValueError as e:
        raise EdfParseError(f"cannot parse {what} {s!r} as number", offset) from e


def parse_edf(data: bytes) -> Recording:
    """Parse EDF bytes into a Recording of physical (microvolt) samples."""
    if len(data) < HEADER_BYTES:
        raise EdfParseError(f"file too short for EDF header: {len(data)} bytes", len(data))
    f = io.BytesIO(data)

    version = f.read(8)
    if version != EDF_VERSION_FIELD:
        raise EdfParseError(f"unsupported version {version!r}", 0)
    patient = _ascii(f.read(80), 8, "patient field")
    recording_field = _ascii(f.read(80), 88, "recording field")
    startdate = _ascii(f.read(8), 168, "start date")
    starttime = _ascii(f.read(8), 176, "start time")
    header_bytes = _int_field(f.read(8), 184, "header byte count")
    reserved = _ascii(f.read(44), 192, "reserved field")
    n_records = _int_field(f.read(8), 236, "record count")
    record_seconds = _float_field(f.read(8), 244, "record duration")
    ns = _int_field(f.read(4), 252, "signal count")
    if ns <= 0:
        raise EdfParseError(f"signal count must be positive, got {ns}", 252)

    expected_header = HEADER_BYTES + ns * SIGNAL_HEADER_BYTES
    if header_bytes != expected_header:
        raise EdfParseError(
            f"malformed header length: field says {header_bytes}, "
            f"{ns} signals imply {expected_header}", 184)
    if len(data) < expected_header:
        raise EdfParseError(f"file truncated inside signal headers", len(data))

    def read_per_signal(width: int, base: int, conv, what: str):
        return [conv(f.read(width), base + i * width, f"{what} of signal {i}") for i in range(ns)]

    labels = [s.rstrip() for s in read_per_signal(16, 256, _ascii, "label")]
    transducers = read_per_signal(80, 256 + ns * 16, _ascii, "transducer")
    units = read_per_signal(8, 256 + ns * 96, _ascii, "units")
    phys_min = read_per_signal(8, 256 + ns * 104, _float_field, "physical min")
    phys_max = read_per_signal(8, 256 + ns * 112, _float_field, "physical max")
    dig_min = read_per_signal(8, 256 + ns * 120, _int_field, "digital min")
    dig_max = read_per_signal(8, 256 + ns * 128, _int_field, "digital max")
    prefilters = read_per_signal(80, 256 + ns * 136, _ascii, "prefilter")
    samples_per_record = read_per_signal(8, 256 + ns * 216, _int_field, "samples per record")
    sig_reserved = read_per_signal(32, 256 + ns * 224, _ascii, "signal reserved")

    for i in range(ns):
        if dig_min[i] >= dig_max[i]:
            raise EdfParseError(
                f"signal {i} ({labels[i]}): digital min {dig_min[i]} >= digital max {dig_max[i]}",
                256 + ns * 120 + i * 8)
        if phys_min[i] == phys_max[i]:
            raise EdfParseError(
                f"signal {i} ({labels[i]}): degenerate physical range {phys_min[i]}",
                256 + ns * 104 + i * 8)
        if samples_per_record[i] <= 0:
            raise EdfParseError(
                f"signal {i} ({labels[i]}): samples per record must be positive",
                256 + ns * 216 + i * 8)

    record_size = 2 * sum(samples_per_record)
    payload = len(data) - expected_header
    if n_records < 0:
        # Record count unknown at write time; recover it from the file size.
        if payload % record_size != 0:
            raise EdfParseError(
                f"inconsistent record sizes: {payload} data bytes are not a "
                f"multiple of the {record_size}-byte record", expected_header + payload)
        n_records = payload // record_size
    elif payload != n_records * record_size:
        raise EdfParseError(
            f"inconsistent record sizes: {n_records} records of {record_size} bytes "
            f"need {n_records * record_size} data bytes, found {payload}",
            expected_header + min(payload, n_records * record_size))

    raw = np.frombuffer(data, dtype="<i2", offset=expected_header)
    raw = raw.reshape(n_records, record_size // 2)
    channels = []
    col = 0
    for i in range(ns):
        spr = samples_per_record[i]
        digital = raw[:, col:col + spr].reshape(-1).astype(np.float64)
        col += spr
        gain = (phys_max[i] - phys_min[i]) / (dig_max[i] - dig_min[i])
        physical = (digital - dig_min[i]) * gain + phys_min[i]
        channels.append(ChannelSignal(
            label=labels[i],
            samples=physical,
            sample_rate_hz=spr / record_seconds,
            physical_range=(phys_min[i], phys_max[i]),
            digital_range=(dig_min[i], dig_max[i]),
        ))

    meta = {
        "patient": patient,
        "recording": recording_field,
        "startdate": startdate,
        "starttime": starttime,
        "reserved": reserved,
        "record_seconds": record_seconds,
        "transducers": transducers,
        "units": units,
        "prefilters": prefilters,
        "signal_reserved": sig_reserved,
    }
    return Recording(
        id=recording_field.strip() or "edf-recording",
        channels=channels,
        start_time=f"{startdate.strip()} {starttime.strip()}".strip() or None,
        edf_meta=meta,
    )


def _fixed(text: str, width: int) -> bytes:
    b = text.encode("ascii")
    if len(b) > width:
        raise EdfRangeError(f"field {text!r} longer than {width} EDF bytes")
    return b.ljust(width)


def _num(value, width: int = 8) -> bytes:
    if isinstance(value, int) or float(value).is_integer():
        s = str(int(value))
    else:
        s = f"{value:.7g}"
    return _fixed(s, width)


def write_edf(r: Recording) -> bytes:
    """Serialize a Recording to EDF bytes.

    Samples are quantized to each channel's declared digital range; values
    outside the physical range raise EdfRangeError. All channel lengths
    must divide into whole data records.
    """
    meta = r.edf_meta or {}
    record_seconds = meta.get("record_seconds", _DEFAULT_RECORD_SECONDS)

    sprs = []
    n_records = None
    for c in r.channels:
        spr = c.sample_rate_hz * record_seconds
        if spr != int(spr):
            raise EdfRangeError(
                f"channel {c.label}: rate {c.sample_rate_hz} Hz does not give whole "
                f"samples per {record_seconds}-second record")
        spr = int(spr)
        if len(c.samples) % spr != 0:
            raise EdfRangeError(
                f"channel {c.label}: {len(c.samples)} samples do not divide into "
                f"whole {spr}-sample records")
        nr = len(c.samples) // spr
        if n_records is None:
            n_records = nr
        elif nr != n_records:
            raise EdfRangeError(f"channel {c.label}: record count {nr} differs from {n_records}")
        sprs.append(spr)
    if n_records is None:
        raise EdfRangeError("recording has no channels")

    ns = len(r.channels)
    out = io.BytesIO()
    out.write(EDF_VERSION_FIELD)
    out.write(_fixed(meta.get("patient", ""), 80))
    out.write(_fixed(meta.get("recording", r.id), 80))
    out.write(_fixed(meta.get("startdate", "01.01.00"), 8))
    out.write(_fixed(meta.get("starttime", "00.00.00"), 8))
    out.write(_num(HEADER_BYTES + ns * SIGNAL_HEADER_BYTES))
    out.write(_fixed(meta.get("reserved", ""), 44))
    out.write(_num(n_records))
    out.write(_num(record_seconds))
    out.write(_num(ns, 4))

    transducers = meta.get("transducers", [""] * ns)
    units = meta.get("units", ["uV"] * ns)
    prefilters = meta.get("prefilters", [""] * ns)
    sig_reserved = meta.get("signal_reserved", [""] * ns)

    for c in r.channels:
        out.write(_fixed(c.label, 16))
    for t in transducers:
        out.write(_fixed(t, 80))
    for u in units:
        out.write(_fixed(u, 8))
    for c in r.channels:
        out.write(_num(c.physical_range[0]))
    for c in r.channels:
        out.write(_num(c.physical_range[1]))
    for c in r.channels:
        out.write(_num(c.digital_range[0]))
    for c in r.channels:
        out.write(_num(c.digital_range[1]))
    for p in prefilters:
        out.write(_fixed(p, 80))
    for spr in sprs:
        out.write(_num(spr))
    for s in sig_reserved:
        out.write(_fixed(s, 32))

    digital_cols = []
    for c in r.channels:
        pmin, pmax = c.physical_range
        dmin, dmax = c.digital_range
        lo, hi = min(pmin, pmax), max(pmin, pmax)
        if np.any(c.samples < lo) or np.any(c.samples > hi):
            bad = c.samples[(c.samples < lo) | (c.samples > hi)][0]
            raise EdfRangeError(
                f"channel {c.label}: sample {bad} outside physical range [{lo}, {hi}]")
        gain = (pmax - pmin) / (dmax - dmin)
        digital = np.rint((c.samples - pmin) / gain + dmin)
        digital_cols.append(np.clip(digital, dmin, dmax).astype("<i2"))

    for rec in range(n_records):
        for digital, spr in zip(digital_cols, sprs):
            out.write(digital[rec * spr:(rec + 1) * spr].tobytes())
    return out.getvalue()
