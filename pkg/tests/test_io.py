import io as stringio

import numpy as np
import pytest

from simtrack.errors import FormatError, ValidationError
from simtrack.geometry import BoundingBox
from simtrack.io import (
    Detection,
    GroundTruthEntry,
    ResultEntry,
    SyntheticSpec,
    generate_synthetic,
    parse_kitti,
    parse_mot,
    read_descriptors,
    write_descriptors,
    write_mot,
    write_mot_detections,
    write_mot_ground_truth,
)


def parse_text(text, **kwargs):
    return parse_mot(stringio.StringIO(text), **kwargs)


def test_parse_mot_detection_row():
    entries, warnings = parse_text("1,-1,10.5,20.5,30,40,0.9\n")
    assert warnings == []
    (det,) = entries
    assert det == Detection(1, BoundingBox(10.5, 20.5, 30, 40), 0.9)


def test_parse_mot_empty_file():
    entries, warnings = parse_text("")
    assert entries == [] and warnings == []


def test_parse_mot_rejects_bad_rows_into_warnings():
    bad = [
        "2,-1,0,0,0,40,0.9",  # zero width
        "3,-1,a,b,c,d,0.9",  # unparseable
        "0,-1,0,0,10,10,0.9",  # frame < 1
        "4,-1,5,5",  # too few fields
    ]
    good = [f"{frame},-1,1,1,2,2,0.5" for frame in range(5, 45)]
    entries, warnings = parse_text("\n".join(bad + good) + "\n")
    assert [line for line, _ in warnings] == [1, 2, 3, 4]
    assert len(entries) == 40


def test_parse_mot_format_error_when_mostly_malformed():
    with pytest.raises(FormatError):
        parse_text("1,-1,0,0,0,10,1.0\n2,-1,0,0,10,10,1.0\n")


def test_parse_mot_ground_truth_and_duplicates():
    rows = ["1,3,0,0,10,10,1,1,0.8", "1,3,5,5,10,10,1,1,0.8"]  # duplicate (1, 3)
    rows += [f"{f},3,0,0,10,10,1,1,0.8" for f in range(2, 12)]
    entries, warnings = parse_text("\n".join(rows) + "\n", kind="ground_truth")
    assert len(entries) == 11
    assert warnings[0][0] == 2 and "duplicate" in warnings[0][1]
    assert entries[0].identity == 3 and entries[0].visibility == 0.8

    rows = ["1,-1,0,0,10,10,1"] + [f"{f},3,0,0,10,10,1" for f in range(2, 13)]
    _, w2 = parse_text("\n".join(rows) + "\n", kind="ground_truth")
    assert len(w2) == 1 and "negative identity" in w2[0][1]


def test_parse_mot_sorts_by_frame_stable():
    text = "3,-1,0,0,5,5,1\n1,-1,1,1,5,5,1\n3,-1,9,9,5,5,1\n"
    entries, _ = parse_text(text)
    assert [e.frame for e in entries] == [1, 3, 3]
    assert entries[1].box.x == 0 and entries[2].box.x == 9


def test_parse_mot_kind_validation():
    with pytest.raises(ValidationError):
        parse_text("", kind="tracks")


def test_write_parse_roundtrip_results():
    rows = [
        ResultEntry(1, 2, BoundingBox(10.25, 20.5, 30.75, 40.0), 0.95),
        ResultEntry(2, 2, BoundingBox(11.0, 21.0, 30.75, 40.0), 1.0),
    ]
    buf = stringio.StringIO()
    write_mot(rows, buf)
    text = buf.getvalue()
    assert text.splitlines()[0] == "1,2,10.25,20.50,30.75,40.00,0.95,-1,-1,-1"
    back, warnings = parse_text(text, kind="results")
    assert warnings == [] and back == rows


def test_parse_write_roundtrip_detections():
    text = "1,-1,10.50,20.50,30.00,40.00,0.90,-1,-1,-1\n"
    entries, _ = parse_text(text)
    buf = stringio.StringIO()
    write_mot_detections(entries, buf)
    assert buf.getvalue() == text


def test_roundtrip_fuzz(rng):
    for _ in range(100):
        n = int(rng.integers(1, 12))
        rows = [
            ResultEntry(
                int(rng.integers(1, 500)),
                int(rng.integers(0, 50)),
                BoundingBox(
                    round(float(rng.uniform(-100, 1000)), 2),
                    round(float(rng.uniform(-100, 1000)), 2),
                    round(float(rng.uniform(0.01, 500)), 2),
                    round(float(rng.uniform(0.01, 500)), 2),
                ),
                round(float(rng.uniform(0, 1)), 2),
            )
            for _ in range(n)
        ]
        buf = stringio.StringIO()
        write_mot(rows, buf)
        back, warnings = parse_text(buf.getvalue(), kind="results")
        assert warnings == []
        assert sorted(back, key=lambda r: (r.frame, r.track_id, r.box.x)) == sorted(
            rows, key=lambda r: (r.frame, r.track_id, r.box.x)
        )


KITTI_ROW = "{frame} {tid} {kind} 0.00 0 -1.57 {l} {t} {r} {b} 1.5 1.6 3.7 1.0 1.5 20.0 -1.6"


def test_parse_kitti_filters_and_converts():
    text = "\n".join(
        [
            KITTI_ROW.format(frame=0, tid=1, kind="Car", l=100, t=50, r=150, b=120),
            KITTI_ROW.format(frame=0, tid=2, kind="Cyclist", l=0, t=0, r=10, b=10),
            KITTI_ROW.format(frame=1, tid=3, kind="Pedestrian", l=5, t=6, r=15, b=26),
            KITTI_ROW.format(frame=1, tid=4, kind="DontCare", l=0, t=0, r=5, b=5),
        ]
    )
    entries, warnings = parse_kitti(stringio.StringIO(text))
    assert warnings == []
    assert [e.class_label for e in entries] == ["Car", "Pedestrian"]
    car = entries[0]
    assert (car.box.x, car.box.y, car.box.w, car.box.h) == (100, 50, 50, 70)
    assert car.truncated == 0.0 and car.occluded == 0


def test_parse_kitti_empty_and_malformed():
    entries, warnings = parse_kitti(stringio.StringIO(""))
    assert entries == [] and warnings == []
    rows = [KITTI_ROW.format(frame=0, tid=1, kind="Car", l=50, t=50, r=40, b=120)]
    rows += [
        KITTI_ROW.format(frame=f, tid=1, kind="Car", l=0, t=0, r=40, b=120) for f in range(1, 13)
    ]
    entries, warnings = parse_kitti(stringio.StringIO("\n".join(rows)))
    assert len(entries) == 12
    assert len(warnings) == 1 and "non-positive" in warnings[0][1]


def test_descriptor_csv_roundtrip(tmp_path):
    table = {
        (1, 0): np.array([0.1, -2.5, 1e-17]),
        (1, 1): np.array([3.0, 4.0, 5.0]),
        (2, 0): np.array([0.0, 0.0, 1.0]),
    }
    path = tmp_path / "desc.csv"
    write_descriptors(table, path)
    back = read_descriptors(path)
    assert set(back) == set(table)
    for key in table:
        np.testing.assert_array_equal(back[key], table[key])
    with pytest.raises(FormatError):
        read_descriptors(stringio.StringIO("nope\n1,2,3\n"))


def test_generate_synthetic_basic_counts():
    seq = generate_synthetic(SyntheticSpec(n_identities=1, n_frames=10), seed=0)
    assert len(seq.detections) == 10
    assert len(seq.ground_truth) == 10
    assert len({e.identity for e in seq.ground_truth}) == 1
    assert set(seq.descriptors) == {(f, 0) for f in range(1, 11)}


def test_generate_synthetic_deterministic():
    spec = SyntheticSpec(n_identities=3, n_frames=20, dropout=0.2, spurious_rate=0.3,
                         descriptor_noise=0.01)
    a = generate_synthetic(spec, seed=9)
    b = generate_synthetic(spec, seed=9)
    assert a.ground_truth == b.ground_truth
    assert [(d.frame, d.box) for d in a.detections] == [(d.frame, d.box) for d in b.detections]
    for key in a.descriptors:
        np.testing.assert_array_equal(a.descriptors[key], b.descriptors[key])


def test_generate_synthetic_spurious_exceeds_gt():
    spec = SyntheticSpec(n_identities=5, n_frames=100, spurious_rate=0.5)
    seq = generate_synthetic(spec, seed=3)
    assert len(seq.detections) > len(seq.ground_truth)


def test_generate_synthetic_dropout_reduces_detections():
    spec = SyntheticSpec(n_identities=5, n_frames=50, dropout=0.3)
    seq = generate_synthetic(spec, seed=3)
    assert len(seq.detections) < len(seq.ground_truth)
    assert len(seq.detections) > 0


def test_gt_writer_roundtrip(tmp_path):
    seq = generate_synthetic(SyntheticSpec(n_identities=2, n_frames=3), seed=1)
    path = tmp_path / "gt.txt"
    write_mot_ground_truth(seq.ground_truth, path)
    back, warnings = parse_mot(path, kind="ground_truth")
    assert warnings == []
    assert [(e.frame, e.identity, e.box) for e in back] == [
        (e.frame, e.identity, e.box) for e in seq.ground_truth
    ]


def test_synthetic_spec_validation():
    with pytest.raises(ValidationError):
        SyntheticSpec(n_identities=0)
    with pytest.raises(ValidationError):
        SyntheticSpec(dropout=1.0)
    with pytest.raises(ValidationError):
        SyntheticSpec(spurious_rate=-0.1)
