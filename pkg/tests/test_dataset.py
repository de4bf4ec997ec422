import itertools

import numpy as np
import pytest

from earkit import dataset as ds
from earkit.errors import EmptyDatasetError, FormatError, ValidationError
from earkit.imgproc import save_grayscale


def _write_images(root, layout):
    for cls, n in layout.items():
        (root / cls).mkdir(parents=True, exist_ok=True)
        for i in range(n):
            save_grayscale(np.full((4, 5), 10 * i, np.uint8), root / cls / f"{i:02d}.png")


def test_scan_directory(tmp_path):
    _write_images(tmp_path, {"b": 2, "a": 3})
    (tmp_path / "a" / "notes.txt").write_text("x")
    (tmp_path / "a" / "broken.png").write_bytes(b"garbage")
    (tmp_path / "stray.png").write_bytes(b"")
    index = ds.scan_directory(tmp_path)
    assert index.image_ids == ["a/00.png", "a/01.png", "a/02.png", "b/00.png", "b/01.png"]
    assert index.labels == ["a", "a", "a", "b", "b"]
    assert index.subjects == ["a", "b"]
    assert len(index.warnings) == 1 and "broken.png" in index.warnings[0]


def test_scan_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        ds.scan_directory(tmp_path / "missing")
    (tmp_path / "empty_class").mkdir()
    with pytest.raises(EmptyDatasetError):
        ds.scan_directory(tmp_path)


def test_subset(tmp_path):
    _write_images(tmp_path, {"a": 2, "b": 2})
    index = ds.scan_directory(tmp_path)
    sub = index.subset(["b/01.png", "a/00.png"])
    assert sub.image_ids == ["a/00.png", "b/01.png"]


# -- annotations ----------------------------------------------------------------

VOCABULARY = {
    "gender": ["Male", "Female"],
    "ethnicity": ["White", "Asian", "South Asian", "Black", "Middle Eastern", "South American", "Other"],
    "accessory": ["None", "Earrings", "Other"],
    "occlusion": ["None", "Mild", "Severe"],
    "pitch": ["Up ++", "Up +", "Neutral", "Down +", "Down ++"],
    "roll": ["To Right ++", "To Right +", "Neutral", "To Left +", "To Left ++"],
    "yaw": ["Frontal Left", "Middle Left", "Profile Left", "Profile Right", "Middle Right", "Frontal Right"],
    "side": ["Left", "Right"],
}


def _annotation_file(path, rows):
    lines = [",".join(ds.ANNOTATION_HEADER)] + [",".join(r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_annotation_vocabulary_is_exhaustive():
    enums = [ds.Gender, ds.Ethnicity, ds.Accessory, ds.Occlusion, ds.HeadPitch, ds.HeadRoll, ds.HeadYaw, ds.HeadSide]
    for enum, values in zip(enums, VOCABULARY.values()):
        assert [e.value for e in enum] == values


def test_annotations_accept_every_label(tmp_path):
    rows = []
    longest = max(len(v) for v in VOCABULARY.values())
    for i in range(longest):
        rows.append([f"s/{i}.png"] + [v[i % len(v)] for v in VOCABULARY.values()] + [str(i), "3"])
    parsed = ds.parse_annotations(_annotation_file(tmp_path / "ann.csv", rows))
    assert len(parsed) == longest
    a = parsed["s/2.png"]
    assert a.ethnicity is ds.Ethnicity.SOUTH_ASIAN and a.head_pitch is ds.HeadPitch.NEUTRAL
    assert a.tragus == (2, 3)
    seen = {field: {getattr(p, attr).value for p in parsed.values()}
            for field, attr in zip(VOCABULARY, ["gender", "ethnicity", "accessory", "occlusion",
                                                "head_pitch", "head_roll", "head_yaw", "head_side"])}
    assert all(seen[f] == set(v) for f, v in VOCABULARY.items())


GOOD = ["x.png", "Male", "White", "None", "None", "Neutral", "Neutral", "Frontal Left", "Left", "5", "6"]


@pytest.mark.parametrize("pos,value", [(1, "male"), (2, "Martian"), (6, "Up"), (7, "Profile"), (9, "a"), (10, "-1")])
def test_annotation_rejects_bad_fields(tmp_path, pos, value):
    row = list(GOOD)
    row[pos] = value
    with pytest.raises(FormatError):
        ds.parse_annotations(_annotation_file(tmp_path / "ann.csv", [row]))


def test_annotation_structure_errors(tmp_path):
    with pytest.raises(FormatError):
        ds.parse_annotations(_annotation_file(tmp_path / "a.csv", [GOOD, GOOD]))
    with pytest.raises(FormatError):
        ds.parse_annotations(_annotation_file(tmp_path / "b.csv", [GOOD[:-1]]))
    (tmp_path / "c.csv").write_text("image,gender\n")
    with pytest.raises(FormatError):
        ds.parse_annotations(tmp_path / "c.csv")


def test_annotation_tragus_bounds(tmp_path):
    path = _annotation_file(tmp_path / "ann.csv", [GOOD])
    assert ds.parse_annotations(path, {"x.png": (6, 7)})["x.png"].tragus == (5, 6)
    with pytest.raises(FormatError):
        ds.parse_annotations(path, {"x.png": (5, 7)})


# -- feature cache ------------------------------------------------------------------

def test_feature_csv_round_trip(tmp_path, rng):
    values = rng.random((4, 6)) * 10.0 ** rng.integers(-20, 20, (4, 6))
    values[0, 0] = 0.0
    values[1, 1] = 1e-300
    cache = ds.FeatureCache("LBP", ("a/1.png", "a/2.png", "b,c/1.png", "d/é.png"), ("a", "a", "b,c", "d"), values)
    path = tmp_path / "LBP.csv"
    ds.export_features(cache, path)
    back = ds.import_features(path)
    assert back == cache
    assert back.values.tobytes() == cache.values.tobytes()
    assert b"\r\n" not in path.read_bytes()


def test_feature_cache_select(rng):
    cache = ds.FeatureCache("HOG", ("x", "y", "z"), ("1", "2", "3"), rng.random((3, 2)))
    sub = cache.select(["z", "x"])
    assert sub.image_ids == ("z", "x") and sub.labels == ("3", "1")
    assert np.array_equal(sub.values, cache.values[[2, 0]])
    with pytest.raises(ValidationError):
        cache.select(["q"])


@pytest.mark.parametrize("text", [
    "",
    "id,label,v0\nx,a,1\n",
    "image,label,v1\nx,a,1\n",
    "image,label,v0,v1\nx,a,1\n",
    "image,label,v0\nx,a,abc\n",
    "image,label,v0\nx,a,1\nx,a,2\n",
])
def test_feature_csv_errors(tmp_path, text):
    path = tmp_path / "f.csv"
    path.write_text(text)
    with pytest.raises(FormatError):
        ds.import_features(path)


def test_feature_cache_validation():
    with pytest.raises(ValidationError):
        ds.FeatureCache("X", ("a", "a"), ("1", "1"), np.zeros((2, 1)))
    with pytest.raises(ValidationError):
        ds.FeatureCache("X", ("a",), ("1", "2"), np.zeros((1, 1)))


# -- splits ---------------------------------------------------------------------------

def _index(n_subjects, per_subject):
    entries = [ds.Entry(f"s{s:03d}/{i:02d}.png", None, f"s{s:03d}")
               for s in range(n_subjects) for i in range(per_subject)]
    return ds.DatasetIndex(tuple(entries))


def test_generate_split_counts_and_disjointness():
    index = _index(100, 10)
    records = ds.generate_split(index, dev_fraction=0.6, k=5, seed=0)
    dev = [r for r in records if r.split == "dev"]
    test = [r for r in records if r.split == "test"]
    assert (len(dev), len(test)) == (600, 400)
    assert not {r.image_id for r in dev} & {r.image_id for r in test}
    assert all(r.fold is None for r in test)
    for s in range(100):
        assert sum(r.subject == f"s{s:03d}" for r in dev) == 6
    folds = ds.folds_from_records(records)
    assert folds.k == 5 and folds.sizes() == [120] * 5
    assert ds.generate_split(index, seed=0) == records
    assert ds.generate_split(index, seed=1) != records


def test_split_list_round_trip(tmp_path):
    records = ds.generate_split(_index(4, 5), k=3)
    path = tmp_path / "split.txt"
    ds.write_split_list(records, path)
    assert ds.read_split_list(path) == records
    dev, test = ds.partition(_index(4, 5), records)
    assert len(dev) + len(test) == 20
    dev2, test2 = ds.apply_split(_index(4, 5), path)
    assert dev2.image_ids == dev.image_ids and test2.image_ids == test.image_ids


@pytest.mark.parametrize("line", [
    "a.png,s,dev",
    "a.png,s,train,0",
    "a.png,s,dev,x",
    "a.png,s,dev,-1",
    "a.png,s,test,2",
])
def test_split_list_format_errors(tmp_path, line):
    path = tmp_path / "split.txt"
    path.write_text(line + "\n")
    with pytest.raises(FormatError):
        ds.read_split_list(path)


def test_split_list_overlap_and_unknown(tmp_path):
    path = tmp_path / "split.txt"
    path.write_text("a.png,s,dev,0\na.png,s,test,-\n")
    with pytest.raises(ValidationError):
        ds.read_split_list(path)
    with pytest.raises(ValidationError):
        ds.partition(_index(1, 1), [ds.SplitRecord("nope.png", "s", "dev", 0)])


def test_dev_fraction_rounding():
    for per_subject, fraction in itertools.product([1, 3, 5, 7], [0.5, 0.6, 1.0]):
        records = ds.generate_split(_index(2, per_subject), dev_fraction=fraction, k=2)
        n_dev = sum(r.split == "dev" for r in records)
        assert n_dev == 2 * int(np.floor(fraction * per_subject + 0.5 + 1e-9))
