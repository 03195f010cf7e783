"""CSV round-trips (byte-identical), header validation, and the parse
errors that name their line numbers."""
import numpy as np
import pytest

from vergekit.events import DetectedEvent, EventSpan
from vergekit.fileio import (
    FileFormatError,
    read_detections,
    read_events,
    read_recording,
    write_detections,
    write_events,
    write_recording,
)
from vergekit.sigcond import Recording
from vergekit.synth import SessionSpec, gen_session

FS = 500.0


@pytest.fixture
def rec():
    rng = np.random.default_rng(0)
    return Recording(rng.normal(0, 5, (2, 700)), sample_rate=FS, start_time=2.5)


# ---------------------------------------------------------------------------
# recordings


def test_recording_roundtrip_values(tmp_path, rec):
    p = str(tmp_path / "r.csv")
    write_recording(p, rec, "abc123")
    back, h = read_recording(p)
    assert h == "abc123"
    assert back.sample_rate == rec.sample_rate
    assert back.start_time == rec.start_time
    assert back.channel_names == rec.channel_names
    np.testing.assert_array_equal(back.samples, rec.samples)


def test_recording_roundtrip_is_byte_identical(tmp_path, rec):
    p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    write_recording(p1, rec, "h")
    back, h = read_recording(p1)
    write_recording(p2, back, h)
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_synthetic_session_roundtrips(tmp_path):
    rec, _ = gen_session(SessionSpec(rounds=1, seed=9))
    p = str(tmp_path / "s.csv")
    write_recording(p, rec)
    back, h = read_recording(p)
    assert h == ""
    np.testing.assert_array_equal(back.samples, rec.samples)


def test_recording_rejects_wrong_magic(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("something-else,1,500.0,0.0,left,right,\n")
    with pytest.raises(FileFormatError, match=r"bad\.csv:1: .*header"):
        read_recording(str(p))


def test_recording_rejects_future_version(tmp_path, rec):
    p = tmp_path / "v.csv"
    write_recording(str(p), rec)
    lines = p.read_text().splitlines()
    lines[0] = lines[0].replace("vergekit-recording,1", "vergekit-recording,2")
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(FileFormatError, match="unsupported format version 2"):
        read_recording(str(p))


def test_recording_rejects_nonuniform_time(tmp_path, rec):
    p = tmp_path / "t.csv"
    write_recording(str(p), rec)
    lines = p.read_text().splitlines()
    parts = lines[10].split(",")
    parts[0] = repr(float(parts[0]) + 0.001)
    lines[10] = ",".join(parts)
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(FileFormatError, match=r"t\.csv:11: non-uniform"):
        read_recording(str(p))


def test_recording_rejects_nonmonotone_time(tmp_path):
    # a duplicated timestamp trips the monotonicity check before the
    # uniformity check gets a say
    p = tmp_path / "m.csv"
    p.write_text(
        "vergekit-recording,1,500.0,0.0,left,right,\n"
        "time_s,left_mV,right_mV\n"
        "0.0,1.0,1.0\n"
        "0.0,2.0,2.0\n"
    )
    with pytest.raises(FileFormatError, match=r"m\.csv:4: .*increasing"):
        read_recording(str(p))


def test_recording_rejects_bad_float(tmp_path, rec):
    p = tmp_path / "f.csv"
    write_recording(str(p), rec)
    lines = p.read_text().splitlines()
    parts = lines[5].split(",")
    parts[1] = "oops"
    lines[5] = ",".join(parts)
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(FileFormatError, match=r"f\.csv:6: bad left_mV value 'oops'"):
        read_recording(str(p))


def test_recording_rejects_nan(tmp_path, rec):
    p = tmp_path / "n.csv"
    write_recording(str(p), rec)
    lines = p.read_text().splitlines()
    parts = lines[5].split(",")
    parts[2] = "nan"
    lines[5] = ",".join(parts)
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(FileFormatError, match="non-finite"):
        read_recording(str(p))


def test_recording_rejects_missing_column_header(tmp_path, rec):
    p = tmp_path / "c.csv"
    write_recording(str(p), rec)
    lines = p.read_text().splitlines()
    del lines[1]
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(FileFormatError, match=r"c\.csv:2: missing column header"):
        read_recording(str(p))


def test_empty_file_rejected(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("")
    with pytest.raises(FileFormatError, match="empty file"):
        read_recording(str(p))


# ---------------------------------------------------------------------------
# event spans


def _spans():
    return [
        EventSpan(2.0, 2.8, "30to70"),
        EventSpan(5.0, 5.9, "200to30"),
        EventSpan(8.0, 8.7, "chewing"),
    ]


def test_events_roundtrip_byte_identical(tmp_path):
    p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    write_events(p1, _spans(), "deadbeef")
    back, h = read_events(p1)
    assert h == "deadbeef"
    assert back == _spans()
    write_events(p2, back, h)
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_events_written_sorted(tmp_path):
    p = str(tmp_path / "s.csv")
    spans = _spans()
    write_events(p, [spans[2], spans[0], spans[1]])
    back, _ = read_events(p)
    assert back == spans


def test_overlapping_events_rejected_on_write(tmp_path):
    with pytest.raises(ValueError, match="overlap"):
        write_events(str(tmp_path / "o.csv"), [EventSpan(1.0, 2.0, "a"), EventSpan(1.5, 3.0, "b")])


def test_overlapping_events_rejected_on_read(tmp_path):
    p = tmp_path / "o.csv"
    p.write_text(
        "vergekit-events,1,\nonset_s,offset_s,label\n1.0,2.0,a\n1.5,3.0,b\n"
    )
    with pytest.raises(FileFormatError, match=r"o\.csv:4: .*overlapping"):
        read_events(str(p))


def test_events_reject_empty_label(tmp_path):
    p = tmp_path / "l.csv"
    p.write_text("vergekit-events,1,\nonset_s,offset_s,label\n1.0,2.0,\n")
    with pytest.raises(FileFormatError, match="empty label"):
        read_events(str(p))


def test_events_reject_inverted_span(tmp_path):
    p = tmp_path / "i.csv"
    p.write_text("vergekit-events,1,\nonset_s,offset_s,label\n2.0,1.0,a\n")
    with pytest.raises(FileFormatError, match=r"i\.csv:3: offset"):
        read_events(str(p))


def test_events_reject_field_count(tmp_path):
    p = tmp_path / "k.csv"
    p.write_text("vergekit-events,1,\nonset_s,offset_s,label\n1.0,2.0\n")
    with pytest.raises(FileFormatError, match="expected 3 fields, got 2"):
        read_events(str(p))


# ---------------------------------------------------------------------------
# detections


def _dets():
    return [
        DetectedEvent(3.25, "30to70", 0.91, 2.4),
        DetectedEvent(6.5, "200to30", 0.77, 5.6),
    ]


def test_detections_roundtrip_byte_identical(tmp_path):
    p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    write_detections(p1, _dets(), "cafe")
    back, h = read_detections(p1)
    assert h == "cafe"
    assert back == _dets()
    write_detections(p2, back, h)
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_empty_detections_roundtrip(tmp_path):
    p = str(tmp_path / "e.csv")
    write_detections(p, [])
    back, h = read_detections(p)
    assert back == [] and h == ""


def test_detections_header_check(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("vergekit-detections,1,\nwrong,header\n")
    with pytest.raises(FileFormatError, match="missing column header"):
        read_detections(str(p))


def test_detections_field_count(tmp_path):
    p = tmp_path / "k.csv"
    p.write_text(
        "vergekit-detections,1,\ntimestamp_s,label,confidence,window_start_s\n1.0,a,0.5\n"
    )
    with pytest.raises(FileFormatError, match="expected 4 fields, got 3"):
        read_detections(str(p))


def test_header_field_count_error(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("vergekit-events,1\n")
    with pytest.raises(FileFormatError, match="header has 2 fields, expected 3"):
        read_events(str(p))
