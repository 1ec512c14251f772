"""Labeled datasets: CSV/binary ingestion, label noise, splitting.

A :class:`LabeledDataset` is the substrate every other module consumes:
an (n, D) float64 feature matrix plus per-row labels drawn from an
ordered alphabet. Instances are immutable once built; all operations
return new datasets.
"""

from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass

import numpy as np

BINARY_MAGIC = b"AKNN"


class DatasetError(ValueError):
    """Raised for malformed dataset inputs (bad CSV, degenerate splits...)."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LabeledDataset:
    """Immutable feature matrix + labels + ordered label alphabet.

    ``label_ids`` holds indices into ``alphabet``; the ``labels`` property
    rebuilds the original identifiers. Alphabet order is significant: binary
    classification maps the first alphabet entry to +1.
    """

    features: np.ndarray
    label_ids: np.ndarray
    alphabet: tuple

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2:
            raise DatasetError("features must be a 2-d matrix")
        ids = np.asarray(self.label_ids, dtype=np.intp)
        if feats.shape[0] != ids.shape[0]:
            raise DatasetError("features and labels must have equal length")
        if feats.shape[0] < 1:
            raise DatasetError("empty dataset")
        if feats.shape[1] < 1:
            raise DatasetError("no feature columns")
        if not np.all(np.isfinite(feats)):
            raise DatasetError("non-finite feature")
        if len(self.alphabet) < 1:
            raise DatasetError("empty alphabet")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise DatasetError("alphabet entries must be distinct")
        if ids.size and (ids.min() < 0 or ids.max() >= len(self.alphabet)):
            raise DatasetError("label outside alphabet")
        object.__setattr__(self, "features", _freeze(feats))
        object.__setattr__(self, "label_ids", _freeze(ids))
        object.__setattr__(self, "alphabet", tuple(self.alphabet))

    @classmethod
    def from_labels(cls, features, labels, alphabet=None) -> "LabeledDataset":
        """Build a dataset from raw label identifiers.

        Without an explicit alphabet the ordering is first appearance,
        which keeps the label-to-index mapping deterministic.
        """
        labels = list(labels)
        if alphabet is None:
            seen: dict = {}
            for lab in labels:
                if lab not in seen:
                    seen[lab] = len(seen)
            alphabet = tuple(seen)
        else:
            alphabet = tuple(alphabet)
            seen = {lab: i for i, lab in enumerate(alphabet)}
        try:
            ids = np.array([seen[lab] for lab in labels], dtype=np.intp)
        except KeyError as exc:
            raise DatasetError(f"label {exc.args[0]!r} not in alphabet") from exc
        return cls(np.asarray(features, dtype=np.float64), ids, alphabet)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def labels(self) -> list:
        return [self.alphabet[i] for i in self.label_ids]

    def with_label_ids(self, label_ids: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(self.features, label_ids, self.alphabet)

    def take(self, indices: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(self.features[indices], self.label_ids[indices], self.alphabet)


@dataclass(frozen=True)
class NoiseSpec:
    """Label corruption: flip each label to a random different one."""

    flip_probability: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.flip_probability <= 1.0:
            raise ValueError("flip_probability must lie in [0, 1]")


def load_csv(path_or_text, label_column: str) -> LabeledDataset:
    """Parse a UTF-8, comma-separated, headered file into a dataset.

    Every non-label column must contain finite decimal reals. The alphabet
    is the distinct labels in order of first appearance; row order is
    preserved. ``path_or_text`` may be a filesystem path or an open text
    stream.
    """
    if hasattr(path_or_text, "read"):
        stream = path_or_text
        return _parse_csv(stream, label_column)
    try:
        with open(path_or_text, "r", encoding="utf-8", newline="") as fh:
            return _parse_csv(fh, label_column)
    except FileNotFoundError as exc:
        raise DatasetError(f"no such file: {path_or_text}") from exc


def load_csv_text(text: str, label_column: str) -> LabeledDataset:
    return _parse_csv(io.StringIO(text), label_column)


def _parse_csv(stream, label_column: str) -> LabeledDataset:
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetError("missing header row") from None
    if len(set(header)) != len(header):
        raise DatasetError("duplicate header column")
    if label_column not in header:
        raise DatasetError(f"missing label column {label_column!r}")
    label_pos = header.index(label_column)
    feature_pos = [i for i in range(len(header)) if i != label_pos]
    if not feature_pos:
        raise DatasetError("no feature columns")

    rows = []
    labels = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DatasetError(f"line {lineno}: expected {len(header)} cells, got {len(row)}")
        values = []
        for i in feature_pos:
            try:
                v = float(row[i])
            except ValueError:
                raise DatasetError(
                    f"line {lineno}: non-numeric feature cell {row[i]!r}"
                ) from None
            if not math.isfinite(v):
                raise DatasetError(f"line {lineno}: non-finite feature")
            values.append(v)
        rows.append(values)
        labels.append(row[label_pos])
    if not rows:
        raise DatasetError("empty dataset")
    return LabeledDataset.from_labels(np.array(rows, dtype=np.float64), labels)


def save_csv(ds: LabeledDataset, path, label_column: str = "label") -> None:
    """Serialize so that a reload reproduces features, labels, and alphabet order.

    Labels are written as their string form; feature reals use ``repr`` so
    float64 values round-trip exactly.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(ds.dim)] + [label_column])
        for row, lid in zip(ds.features, ds.label_ids):
            writer.writerow([repr(float(v)) for v in row] + [str(ds.alphabet[lid])])


def save_binary(ds: LabeledDataset, path) -> None:
    """Compact little-endian dump: magic, u32 n, u32 D, f64 row-major features,
    then labels as u32 alphabet indices. The alphabet itself is not stored."""
    with open(path, "wb") as fh:
        fh.write(BINARY_MAGIC)
        fh.write(struct.pack("<II", ds.n, ds.dim))
        fh.write(np.ascontiguousarray(ds.features, dtype="<f8").tobytes())
        fh.write(ds.label_ids.astype("<u4").tobytes())


def load_binary(path, alphabet=None) -> LabeledDataset:
    """Inverse of :func:`save_binary`.

    Since the format stores indices only, pass the alphabet to recover
    original identifiers; otherwise indices 0..K-1 become the alphabet.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != BINARY_MAGIC:
        raise DatasetError("bad magic bytes")
    n, dim = struct.unpack_from("<II", blob, 4)
    off = 12
    feat_bytes = n * dim * 8
    feats = np.frombuffer(blob, dtype="<f8", count=n * dim, offset=off).reshape(n, dim)
    ids = np.frombuffer(blob, dtype="<u4", count=n, offset=off + feat_bytes).astype(np.intp)
    if alphabet is None:
        alphabet = tuple(range(int(ids.max()) + 1)) if n else ()
    return LabeledDataset(feats.copy(), ids, tuple(alphabet))


def inject_label_noise(ds: LabeledDataset, spec: NoiseSpec) -> LabeledDataset:
    """Independently flip each label, with the given probability, to a uniformly
    random *different* alphabet entry. Features and alphabet are untouched;
    the corruption rate is therefore exactly the flip probability."""
    k = len(ds.alphabet)
    if k < 2:
        raise DatasetError("label noise needs an alphabet of size >= 2")
    rng = np.random.default_rng(spec.seed)
    flip = rng.random(ds.n) < spec.flip_probability
    # offset in 1..k-1 guarantees a different label
    offsets = rng.integers(1, k, size=ds.n)
    new_ids = np.where(flip, (ds.label_ids + offsets) % k, ds.label_ids)
    return ds.with_label_ids(new_ids)


def split(ds: LabeledDataset, test_fraction: float, seed: int = 0):
    """Disjoint (train, test) partition by uniform shuffle; both parts share
    the parent alphabet. Deterministic given the seed."""
    if ds.n < 2:
        raise DatasetError("need at least 2 rows to split")
    if not 0.0 < test_fraction < 1.0:
        raise DatasetError("test_fraction must lie in (0, 1)")
    n_test = int(round(ds.n * test_fraction))
    if n_test == 0 or n_test == ds.n:
        raise DatasetError("degenerate split: one part would be empty")
    perm = np.random.default_rng(seed).permutation(ds.n)
    return ds.take(perm[n_test:]), ds.take(perm[:n_test])
