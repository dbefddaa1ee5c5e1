"""Synthetic classification datasets, long-tail imbalancing, CSV round trip.

Generators are pure functions of their spec (seed included).  Imbalance
only removes samples; it never edits features or labels.  Test splits
are stratified so evaluation stays balanced even when training data is
long-tailed.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

GENERATORS = ("gaussian_mixture", "concentric_rings", "csv_file")
IMBALANCE_PROFILES = ("step", "exponential")


@dataclass
class Sample:
    id: int
    features: np.ndarray
    label: int


@dataclass
class Dataset:
    """Column-oriented sample container; immutable by convention."""

    ids: np.ndarray
    X: np.ndarray
    y: np.ndarray
    n_classes: int
    class_means: np.ndarray | None = None

    def __len__(self) -> int:
        return self.ids.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def samples(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield Sample(int(self.ids[i]), self.X[i], int(self.y[i]))

    def take(self, indices) -> "Dataset":
        """Row subset by positional indices; shares the id space."""
        idx = np.asarray(indices)
        return Dataset(self.ids[idx], self.X[idx], self.y[idx], self.n_classes, self.class_means)

    def by_ids(self, wanted) -> "Dataset":
        """Row subset by sample ids, in the order given."""
        pos = {int(s): i for i, s in enumerate(self.ids)}
        idx = np.array([pos[int(w)] for w in wanted], dtype=int)
        return self.take(idx)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.n_classes)


@dataclass
class ImbalanceSpec:
    ratio: float = 1.0
    profile: str = "step"
    minor_classes: list[int] | None = None

    def __post_init__(self):
        if self.ratio < 1:
            raise ValueError("imbalance ratio must be >= 1")
        if self.profile not in IMBALANCE_PROFILES:
            raise ValueError(f"imbalance profile must be one of {IMBALANCE_PROFILES}")


@dataclass
class DatasetSpec:
    generator: str = "gaussian_mixture"
    n_classes: int = 10
    dim: int = 8
    per_class: int = 100
    radius: float = 3.0
    noise: float = 1.0
    imbalance: ImbalanceSpec = field(default_factory=ImbalanceSpec)
    test_fraction: float = 0.25
    seed: int = 0
    csv_path: str | None = None

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ValueError(f"generator must be one of {GENERATORS}")
        if not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must be in (0, 1)")
        if self.generator != "csv_file":
            if self.n_classes < 2:
                raise ValueError("n_classes must be >= 2")
            if self.per_class < 1:
                raise ValueError("per_class must be >= 1")
        if isinstance(self.imbalance, dict):
            self.imbalance = ImbalanceSpec(**self.imbalance)


def gen_gaussian_mixture(spec: DatasetSpec) -> Dataset:
    """Isotropic Gaussian blobs with means on a seeded random sphere."""
    if spec.dim < 2:
        raise ValueError("gaussian_mixture needs dim >= 2")
    rng = np.random.default_rng(spec.seed)
    dirs = rng.normal(size=(spec.n_classes, spec.dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    means = spec.radius * dirs
    X = np.concatenate(
        [means[c] + spec.noise * rng.normal(size=(spec.per_class, spec.dim)) for c in range(spec.n_classes)]
    )
    y = np.repeat(np.arange(spec.n_classes), spec.per_class)
    ids = np.arange(len(y), dtype=np.int64)
    return Dataset(ids, X, y.astype(np.int64), spec.n_classes, class_means=means)


def gen_concentric_rings(spec: DatasetSpec) -> Dataset:
    """Class c sits on radius (c+1)*radius with Gaussian radial noise."""
    if spec.dim != 2:
        raise ValueError("concentric_rings is defined for dim = 2")
    rng = np.random.default_rng(spec.seed)
    parts = []
    for c in range(spec.n_classes):
        theta = rng.uniform(0.0, 2.0 * np.pi, size=spec.per_class)
        r = (c + 1) * spec.radius + spec.noise * rng.normal(size=spec.per_class)
        parts.append(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))
    X = np.concatenate(parts)
    y = np.repeat(np.arange(spec.n_classes), spec.per_class)
    ids = np.arange(len(y), dtype=np.int64)
    return Dataset(ids, X, y.astype(np.int64), spec.n_classes)


def nearest_mean_predict(X: np.ndarray, means: np.ndarray) -> np.ndarray:
    """Assign each row to the closest class mean (Euclidean)."""
    d2 = ((X[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
    return d2.argmin(axis=1)


def apply_imbalance(
    ds: Dataset,
    ratio: float,
    profile: str = "step",
    minor_classes: list[int] | None = None,
    seed: int = 0,
) -> Dataset:
    """Down-sample classes to a long-tailed profile.

    step: classes in ``minor_classes`` (default: the upper half of the
    class range) are cut to floor(N_max / ratio); the rest keep all
    samples.  exponential: class c is cut to N_max * ratio**(-c/(C-1)).
    Removal is seeded-random without replacement; original row order is
    preserved among survivors.
    """
    if ratio < 1:
        raise ValueError("imbalance ratio must be >= 1")
    if profile not in IMBALANCE_PROFILES:
        raise ValueError(f"imbalance profile must be one of {IMBALANCE_PROFILES}")
    if ratio == 1:
        return ds.take(np.arange(len(ds)))
    counts = ds.class_counts()
    n_max = int(counts.max())
    C = ds.n_classes
    if profile == "step":
        if minor_classes is None:
            minor_classes = list(range(C // 2, C))
        minor = set(int(c) for c in minor_classes)
        targets = [int(n_max // ratio) if c in minor else int(counts[c]) for c in range(C)]
    else:
        targets = [int(n_max * ratio ** (-c / (C - 1)) + 1e-9) for c in range(C)]
    if any(t < 1 for t in targets):
        raise ValueError(f"ratio {ratio} empties a class (targets {targets})")

    rng = np.random.default_rng(seed)
    keep = np.zeros(len(ds), dtype=bool)
    for c in range(C):
        idx = np.flatnonzero(ds.y == c)
        t = min(targets[c], idx.size)
        keep[rng.choice(idx, size=t, replace=False)] = True
    return ds.take(np.flatnonzero(keep))


def split(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified train/test split; disjoint, union preserving."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    test_mask = np.zeros(len(ds), dtype=bool)
    for c in range(ds.n_classes):
        idx = np.flatnonzero(ds.y == c)
        if idx.size == 0:
            continue
        if idx.size < 2:
            warnings.warn(f"class {c} has a single sample; keeping it in train")
            continue
        n_test = int(np.floor(idx.size * test_fraction + 0.5))
        n_test = min(max(n_test, 1), idx.size - 1)
        test_mask[rng.choice(idx, size=n_test, replace=False)] = True
    return ds.take(np.flatnonzero(~test_mask)), ds.take(np.flatnonzero(test_mask))


def build_dataset(spec: DatasetSpec) -> tuple[Dataset, Dataset]:
    """Generate, split, then imbalance the training side only."""
    if spec.generator == "gaussian_mixture":
        full = gen_gaussian_mixture(spec)
    elif spec.generator == "concentric_rings":
        full = gen_concentric_rings(spec)
    else:
        if not spec.csv_path:
            raise ValueError("csv_file generator requires csv_path")
        full = load_csv(spec.csv_path)
    train, test = split(full, spec.test_fraction, spec.seed)
    if spec.imbalance.ratio > 1:
        train = apply_imbalance(
            train,
            spec.imbalance.ratio,
            spec.imbalance.profile,
            spec.imbalance.minor_classes,
            seed=spec.seed,
        )
    return train, test


def minor_class_set(spec: DatasetSpec) -> list[int]:
    """Classes treated as minority under the spec's imbalance settings."""
    imb = spec.imbalance
    if imb.ratio <= 1:
        return []
    if imb.profile == "step":
        if imb.minor_classes is not None:
            return [int(c) for c in imb.minor_classes]
        return list(range(spec.n_classes // 2, spec.n_classes))
    # exponential: every class below the head count is reduced
    return list(range(1, spec.n_classes))


def save_csv(ds: Dataset, path) -> None:
    """Write ``id,feature_0,...,feature_{d-1},label`` rows."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id"] + [f"feature_{j}" for j in range(ds.dim)] + ["label"])
        for i in range(len(ds)):
            w.writerow(
                [int(ds.ids[i])] + [repr(float(v)) for v in ds.X[i]] + [int(ds.y[i])]
            )


def load_csv(path) -> Dataset:
    """Read a dataset written by save_csv; lossless round trip.

    Malformed rows raise ValueError naming the 1-based line number.
    """
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if len(header) < 3 or header[0] != "id" or header[-1] != "label":
            raise ValueError(f"{path} line 1: header must be id,feature_*,label")
        dim = len(header) - 2
        expected = [f"feature_{j}" for j in range(dim)]
        if header[1:-1] != expected:
            raise ValueError(f"{path} line 1: feature columns must be {expected}")
        ids, feats, labels = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != dim + 2:
                raise ValueError(f"{path} line {lineno}: expected {dim + 2} fields, got {len(row)}")
            try:
                ids.append(int(row[0]))
                feats.append([float(v) for v in row[1:-1]])
                labels.append(int(row[-1]))
            except ValueError as e:
                raise ValueError(f"{path} line {lineno}: {e}") from None
    if not ids:
        raise ValueError(f"{path}: no data rows")
    y = np.array(labels, dtype=np.int64)
    if y.min() < 0:
        raise ValueError(f"{path}: negative class label")
    return Dataset(
        np.array(ids, dtype=np.int64),
        np.array(feats, dtype=np.float64),
        y,
        n_classes=int(y.max()) + 1,
    )
