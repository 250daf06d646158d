"""Datasets, client shards and the columnar on-disk format."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (k, d) float64
    labels: np.ndarray  # (k,) int64
    n_classes: int

    def __post_init__(self):
        if self.features.ndim != 2 or self.labels.ndim != 1:
            raise ValueError("features must be 2-D and labels 1-D")
        if len(self.features) != len(self.labels):
            raise ValueError(f"{len(self.features)} feature rows vs {len(self.labels)} labels")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise ValueError(f"labels must lie in 0..{self.n_classes - 1}")

    def __len__(self):
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.n_classes)


@dataclass(frozen=True)
class DataShard:
    """One client's local data; ``indices`` point back into the source dataset."""

    features: np.ndarray
    labels: np.ndarray
    indices: np.ndarray

    @property
    def k(self) -> int:
        return len(self.labels)


def make_gaussian_mixture(
    n_samples: int,
    rng: np.random.Generator,
    n_features: int = 32,
    n_classes: int = 10,
    separation: float = 1.0,
) -> Dataset:
    """Balanced classes; unit-variance isotropic clusters around random centers.

    Class centers are drawn i.i.d. normal with per-coordinate std
    ``separation / sqrt(n_features)``, so their norms are about ``separation``.
    """
    if n_samples < n_classes:
        raise ValueError("need at least one sample per class")
    centers = rng.normal(0.0, separation / np.sqrt(n_features), size=(n_classes, n_features))
    labels = np.arange(n_samples) % n_classes
    rng.shuffle(labels)
    features = centers[labels] + rng.standard_normal((n_samples, n_features))
    return Dataset(features, labels.astype(np.int64), n_classes)


def train_test_split(data: Dataset, test_fraction: float, rng: np.random.Generator) -> tuple[Dataset, Dataset]:
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    perm = rng.permutation(len(data))
    n_test = int(round(test_fraction * len(data)))
    return data.subset(np.sort(perm[n_test:])), data.subset(np.sort(perm[:n_test]))


def _shards(data: Dataset, groups) -> list[DataShard]:
    out = []
    for g in groups:
        g = np.sort(np.asarray(g, dtype=np.int64))
        out.append(DataShard(data.features[g], data.labels[g], g))
    return out


def partition_iid(data: Dataset, n_clients: int, rng: np.random.Generator) -> list[DataShard]:
    """Random equal split; shard sizes differ by at most one."""
    if n_clients < 1:
        raise ValueError("n_clients must be >= 1")
    if n_clients > len(data):
        raise ValueError(f"cannot split {len(data)} samples over {n_clients} clients")
    perm = rng.permutation(len(data))
    return _shards(data, np.array_split(perm, n_clients))


def _largest_remainder(total: int, props: np.ndarray) -> np.ndarray:
    raw = props * total
    counts = np.floor(raw).astype(np.int64)
    short = total - counts.sum()
    if short:
        # stable sort: earlier clients win ties
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def partition_dirichlet(data: Dataset, n_clients: int, alpha_d: float, rng: np.random.Generator) -> list[DataShard]:
    """Label-skewed split with per-class client proportions ~ Dirichlet(alpha_d)."""
    if not alpha_d > 0:
        raise ValueError(f"alpha_d must be > 0, got {alpha_d}")
    if n_clients < 1:
        raise ValueError("n_clients must be >= 1")
    if n_clients > len(data):
        raise ValueError(f"cannot split {len(data)} samples over {n_clients} clients")
    groups: list[list[int]] = [[] for _ in range(n_clients)]
    for c in range(data.n_classes):
        members = np.flatnonzero(data.labels == c)
        if len(members) == 0:
            raise ValueError(f"class {c} has no samples")
        rng.shuffle(members)
        props = rng.dirichlet(np.full(n_clients, alpha_d))
        counts = _largest_remainder(len(members), props)
        for client, chunk in enumerate(np.split(members, np.cumsum(counts)[:-1])):
            groups[client].extend(chunk.tolist())
    # every client must train on something
    for client in range(n_clients):
        if not groups[client]:
            donor = max(range(n_clients), key=lambda i: (len(groups[i]), -i))
            groups[client].append(groups[donor].pop())
    return _shards(data, groups)


def save_dataset(data: Dataset, path) -> None:
    """Write ``<path>.bin`` (features then labels, little-endian float64) and a JSON sidecar ``<path>.json``."""
    path = Path(path)
    blob = np.concatenate([data.features.ravel(), data.labels.astype(np.float64)]).astype("<f8")
    path.with_suffix(".bin").write_bytes(blob.tobytes())
    meta = {
        "n_samples": len(data),
        "n_features": data.n_features,
        "n_classes": data.n_classes,
        "dtype": "<f8",
        "layout": ["features:row-major", "labels"],
    }
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_dataset(path) -> Dataset:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    k, d = int(meta["n_samples"]), int(meta["n_features"])
    blob = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype="<f8")
    if blob.size != k * d + k:
        raise ValueError(f"{path}: expected {k * d + k} doubles, found {blob.size}")
    features = blob[: k * d].reshape(k, d).astype(np.float64)
    labels = blob[k * d:].astype(np.int64)
    return Dataset(features, labels, int(meta["n_classes"]))
