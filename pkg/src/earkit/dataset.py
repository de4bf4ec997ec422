"""Dataset indexing, annotations, split/fold lists and the CSV feature cache.

File formats
------------
Feature CSV
    header ``image,label,v0,...,v{dim-1}``; values written as shortest
    round-trip decimals.
Split list
    one record per line, ``relative/image/path,subject_id,split,fold`` with
    split ``dev`` or ``test`` and fold ``0..k-1`` (``-`` for test images).
Annotation CSV
    header ``image,gender,ethnicity,accessory,occlusion,pitch,roll,yaw,side,tragus_x,tragus_y``.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from PIL import Image

from .errors import EmptyDatasetError, FormatError, ValidationError
from .evaluation import FoldAssignment, kfold_split

log = logging.getLogger(__name__)

IMAGE_EXTENSIONS = frozenset({".png", ".jpg", ".jpeg", ".bmp"})


@dataclass(frozen=True)
class Entry:
    image_id: str
    path: Path
    label: str


@dataclass(frozen=True)
class DatasetIndex:
    entries: tuple[Entry, ...]
    name: str = "dataset"
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        ids = [e.image_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValidationError("image ids must be unique")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def image_ids(self) -> list[str]:
        return [e.image_id for e in self.entries]

    @property
    def labels(self) -> list[str]:
        return [e.label for e in self.entries]

    @property
    def subjects(self) -> list[str]:
        return sorted(set(self.labels))

    def subset(self, image_ids: Iterable[str], name: str | None = None) -> "DatasetIndex":
        wanted = set(image_ids)
        return DatasetIndex(tuple(e for e in self.entries if e.image_id in wanted),
                            name or self.name, self.warnings)


def _readable(path: Path) -> str | None:
    try:
        with Image.open(path) as im:
            im.verify()
    except Exception as exc:  # noqa: BLE001 - any decoder failure means unreadable
        return f"{path}: {exc}"
    return None


def scan_directory(root, name: str | None = None, verify: bool = True) -> DatasetIndex:
    """Index a directory whose immediate subdirectories are class folders.

    Image ids are ``<class>/<file>`` relative paths; entries are sorted
    lexicographically. Files that fail to decode are skipped and reported in
    ``DatasetIndex.warnings``.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root not found: {root}")
    classes = sorted(p for p in root.iterdir() if p.is_dir())
    entries = []
    warnings = []
    for cls in classes:
        for f in sorted(cls.iterdir()):
            if not f.is_file() or f.suffix.lower() not in IMAGE_EXTENSIONS:
                continue
            if verify and (problem := _readable(f)):
                warnings.append(problem)
                log.warning("skipping unreadable image %s", problem)
                continue
            entries.append(Entry(f"{cls.name}/{f.name}", f, cls.name))
    if not entries:
        raise EmptyDatasetError(f"no class folders with images under {root}")
    entries.sort(key=lambda e: e.image_id)
    return DatasetIndex(tuple(entries), name or root.name, tuple(warnings))


# -- annotations --------------------------------------------------------------


class Gender(str, Enum):
    MALE = "Male"
    FEMALE = "Female"


class Ethnicity(str, Enum):
    WHITE = "White"
    ASIAN = "Asian"
    SOUTH_ASIAN = "South Asian"
    BLACK = "Black"
    MIDDLE_EASTERN = "Middle Eastern"
    SOUTH_AMERICAN = "South American"
    OTHER = "Other"


class Accessory(str, Enum):
    NONE = "None"
    EARRINGS = "Earrings"
    OTHER = "Other"


class Occlusion(str, Enum):
    NONE = "None"
    MILD = "Mild"
    SEVERE = "Severe"


class HeadPitch(str, Enum):
    UP_2 = "Up ++"
    UP_1 = "Up +"
    NEUTRAL = "Neutral"
    DOWN_1 = "Down +"
    DOWN_2 = "Down ++"


class HeadRoll(str, Enum):
    RIGHT_2 = "To Right ++"
    RIGHT_1 = "To Right +"
    NEUTRAL = "Neutral"
    LEFT_1 = "To Left +"
    LEFT_2 = "To Left ++"


class HeadYaw(str, Enum):
    FRONTAL_LEFT = "Frontal Left"
    MIDDLE_LEFT = "Middle Left"
    PROFILE_LEFT = "Profile Left"
    PROFILE_RIGHT = "Profile Right"
    MIDDLE_RIGHT = "Middle Right"
    FRONTAL_RIGHT = "Frontal Right"


class HeadSide(str, Enum):
    LEFT = "Left"
    RIGHT = "Right"


ANNOTATION_HEADER = ("image", "gender", "ethnicity", "accessory", "occlusion",
                     "pitch", "roll", "yaw", "side", "tragus_x", "tragus_y")

_VOCAB: dict[str, type[Enum]] = {
    "gender": Gender, "ethnicity": Ethnicity, "accessory": Accessory, "occlusion": Occlusion,
    "pitch": HeadPitch, "roll": HeadRoll, "yaw": HeadYaw, "side": HeadSide,
}


@dataclass(frozen=True)
class Annotation:
    gender: Gender
    ethnicity: Ethnicity
    accessory: Accessory
    occlusion: Occlusion
    head_pitch: HeadPitch
    head_roll: HeadRoll
    head_yaw: HeadYaw
    head_side: HeadSide
    tragus: tuple[int, int]


def parse_annotations(file, image_sizes: Mapping[str, tuple[int, int]] | None = None) -> dict[str, Annotation]:
    """Read an annotation CSV into ``{image_id: Annotation}``.

    Labels must match the closed vocabularies exactly. When ``image_sizes``
    (``{image_id: (width, height)}``) is given, tragus points are checked
    against the image bounds.
    """
    path = Path(file)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != ANNOTATION_HEADER:
            raise FormatError(f"{path}: header must be {','.join(ANNOTATION_HEADER)}")
        out: dict[str, Annotation] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(ANNOTATION_HEADER):
                raise FormatError(f"{path}:{lineno}: expected {len(ANNOTATION_HEADER)} fields, got {len(row)}")
            rec = dict(zip(ANNOTATION_HEADER, (c.strip() for c in row)))
            image_id = rec["image"]
            if not image_id:
                raise FormatError(f"{path}:{lineno}: missing image id")
            if image_id in out:
                raise FormatError(f"{path}:{lineno}: duplicate image id {image_id!r}")
            values = {}
            for key, enum in _VOCAB.items():
                try:
                    values[key] = enum(rec[key])
                except ValueError:
                    raise FormatError(f"{path}:{lineno}: field {key!r} has unknown label {rec[key]!r}") from None
            try:
                tx, ty = int(rec["tragus_x"]), int(rec["tragus_y"])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: tragus coordinates must be integers") from None
            bounds = (image_sizes or {}).get(image_id)
            if tx < 0 or ty < 0 or (bounds and (tx >= bounds[0] or ty >= bounds[1])):
                raise FormatError(f"{path}:{lineno}: tragus ({tx}, {ty}) outside the image")
            out[image_id] = Annotation(values["gender"], values["ethnicity"], values["accessory"],
                                       values["occlusion"], values["pitch"], values["roll"],
                                       values["yaw"], values["side"], (tx, ty))
    return out


# -- feature cache ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FeatureCache:
    descriptor_id: str
    image_ids: tuple[str, ...]
    labels: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValidationError("feature values must be a 2-D array")
        if not (len(self.image_ids) == len(self.labels) == values.shape[0]):
            raise ValidationError("image ids, labels and rows must have equal length")
        if len(set(self.image_ids)) != len(self.image_ids):
            raise ValidationError("duplicate image ids in feature cache")
        object.__setattr__(self, "image_ids", tuple(self.image_ids))
        object.__setattr__(self, "labels", tuple(str(l) for l in self.labels))
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureCache):
            return NotImplemented
        return (self.descriptor_id == other.descriptor_id and self.image_ids == other.image_ids
                and self.labels == other.labels and self.values.shape == other.values.shape
                and bool(np.array_equal(self.values, other.values)))

    __hash__ = None

    def select(self, image_ids: Sequence[str]) -> "FeatureCache":
        pos = {i: n for n, i in enumerate(self.image_ids)}
        try:
            rows = [pos[i] for i in image_ids]
        except KeyError as exc:
            raise ValidationError(f"image {exc.args[0]!r} not in feature cache") from None
        return replace(self, image_ids=tuple(image_ids),
                       labels=tuple(self.labels[r] for r in rows), values=self.values[rows])


def export_features(cache: FeatureCache, file) -> None:
    """Write ``cache`` as CSV (UTF-8, LF line endings)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["image", "label"] + [f"v{i}" for i in range(cache.dim)])
    for image_id, label, row in zip(cache.image_ids, cache.labels, cache.values):
        writer.writerow([image_id, label] + [repr(float(v)) for v in row])
    Path(file).write_text(buf.getvalue(), encoding="utf-8", newline="")


def import_features(file, descriptor_id: str | None = None) -> FeatureCache:
    """Read a feature CSV; ``descriptor_id`` defaults to the file stem in upper case."""
    path = Path(file)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["image", "label"] or len(header) < 3:
            raise FormatError(f"{path}: header must start with image,label,v0")
        dim = len(header) - 2
        if header[2:] != [f"v{i}" for i in range(dim)]:
            raise FormatError(f"{path}: value columns must be named v0..v{dim - 1}")
        ids, labels, rows = [], [], []
        seen = set()
        for lineno, row in enumerate(reader, start=2):
            if len(row) != dim + 2:
                raise FormatError(f"{path}:{lineno}: expected {dim + 2} columns, got {len(row)}")
            if row[0] in seen:
                raise FormatError(f"{path}:{lineno}: duplicate image id {row[0]!r}")
            seen.add(row[0])
            try:
                rows.append([float(v) for v in row[2:]])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            ids.append(row[0])
            labels.append(row[1])
    values = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    return FeatureCache(descriptor_id or path.stem.upper(), tuple(ids), tuple(labels), values)


# -- split / fold lists ---------------------------------------------------------


@dataclass(frozen=True)
class SplitRecord:
    image_id: str
    subject: str
    split: str
    fold: int | None


def read_split_list(file) -> list[SplitRecord]:
    path = Path(file)
    records = []
    seen = set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 4:
            raise FormatError(f"{path}:{lineno}: expected 4 comma-separated fields")
        image_id, subject, split, fold = parts
        if split not in ("dev", "test"):
            raise FormatError(f"{path}:{lineno}: split must be 'dev' or 'test', got {split!r}")
        if fold == "-":
            fold_val = None
        else:
            try:
                fold_val = int(fold)
            except ValueError:
                raise FormatError(f"{path}:{lineno}: fold must be an integer or '-'") from None
            if fold_val < 0:
                raise FormatError(f"{path}:{lineno}: negative fold")
        if split == "test" and fold_val is not None:
            raise FormatError(f"{path}:{lineno}: test images take fold '-'")
        if image_id in seen:
            raise ValidationError(f"{path}:{lineno}: image {image_id!r} listed twice (dev/test overlap)")
        seen.add(image_id)
        records.append(SplitRecord(image_id, subject, split, fold_val))
    return records


def write_split_list(records: Iterable[SplitRecord], file) -> None:
    lines = [f"{r.image_id},{r.subject},{r.split},{'-' if r.fold is None else r.fold}" for r in records]
    Path(file).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="")


def generate_split(index: DatasetIndex, dev_fraction: float = 0.6, k: int = 5, seed: int = 0) -> list[SplitRecord]:
    """Seeded per-subject dev/test split plus subject-stratified dev folds.

    Each subject contributes ``round(dev_fraction * n)`` images (half-up) to
    the development set; the rest go to the test set.
    """
    if not 0 < dev_fraction <= 1:
        raise ValidationError("dev_fraction must be in (0, 1]")
    rng = np.random.default_rng(seed)
    by_subject: dict[str, list[str]] = {}
    for e in index.entries:
        by_subject.setdefault(e.label, []).append(e.image_id)
    dev, test = [], []
    for subject in sorted(by_subject):
        images = sorted(by_subject[subject])
        order = rng.permutation(len(images))
        n_dev = int(np.floor(dev_fraction * len(images) + 0.5 + 1e-9))
        dev += [(images[j], subject) for j in order[:n_dev]]
        test += [(images[j], subject) for j in order[n_dev:]]
    folds = kfold_split(dev, k, seed)
    records = [SplitRecord(i, s, "dev", folds.fold_of_image[i]) for i, s in dev]
    records += [SplitRecord(i, s, "test", None) for i, s in test]
    return sorted(records, key=lambda r: r.image_id)


def apply_split(index: DatasetIndex, lists=None, seed: int = 0,
                dev_fraction: float = 0.6) -> tuple[DatasetIndex, DatasetIndex]:
    """Partition ``index`` into (dev, test) per a split list file or a generated split."""
    records = read_split_list(lists) if lists is not None else generate_split(index, dev_fraction, seed=seed)
    return partition(index, records)


def partition(index: DatasetIndex, records: Sequence[SplitRecord]) -> tuple[DatasetIndex, DatasetIndex]:
    known = set(index.image_ids)
    dev_ids, test_ids = set(), set()
    for r in records:
        if r.image_id not in known:
            raise ValidationError(f"split list names unknown image {r.image_id!r}")
        (dev_ids if r.split == "dev" else test_ids).add(r.image_id)
    if dev_ids & test_ids:
        raise ValidationError("dev and test sets overlap")
    return index.subset(dev_ids, f"{index.name}:dev"), index.subset(test_ids, f"{index.name}:test")


def folds_from_records(records: Sequence[SplitRecord]) -> FoldAssignment:
    """Fold assignment of the dev records; ``k`` is one past the largest fold index."""
    dev = {r.image_id: r.fold for r in records if r.split == "dev"}
    if not dev:
        raise ValidationError("split list has no development images")
    if any(f is None for f in dev.values()):
        raise ValidationError("every development image needs a fold index")
    return FoldAssignment(dev, max(dev.values()) + 1)
