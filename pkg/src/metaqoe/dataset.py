"""Synthetic user-object-attention corpus and sparse observation masks.

The generator plants a low-rank-plus-noise interest model, quantizes each
user's scores into 5 levels by sorted quintile split, and builds an image
pool with skewed object popularity. Sparsification mimics scenario
selection: a user visits a few image groups, keeps a random fraction of
their images, and only objects appearing in the kept images are observed.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .types import AttentionMatrix, ConfigError

__all__ = [
    "CorpusConfig",
    "SyntheticCorpus",
    "generate_corpus",
    "sparsify",
    "load_matrix",
    "save_matrix",
]


@dataclass(frozen=True)
class CorpusConfig:
    n_users: int = 30
    n_objects: int = 96
    n_images: int = 1000
    n_groups: int = 20
    latent_rank: int = 4
    noise: float = 0.05
    objects_per_image: int = 3
    popularity_exponent: float = 1.1
    group_low: int = 2
    group_high: int = 4
    keep_low: float = 0.3
    keep_high: float = 0.7

    def __post_init__(self):
        for name in ("n_users", "n_objects", "n_images", "n_groups", "latent_rank"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >=1")
        if self.objects_per_image < 1 or self.objects_per_image > self.n_objects:
            raise ConfigError("objects_per_image out of range")


@dataclass
class SyntheticCorpus:
    config: CorpusConfig
    seed: int
    scores: np.ndarray  # raw per-(user, object) interest scores
    ground_truth: AttentionMatrix  # dense 5-level matrix
    level_thresholds: np.ndarray  # per-user boundaries between levels
    image_objects: tuple  # object index tuple per image
    groups: tuple  # image index tuple per group
    object_labels: tuple = field(default_factory=tuple)

    @property
    def n_users(self) -> int:
        return self.config.n_users

    @property
    def n_objects(self) -> int:
        return self.config.n_objects

    def manifest(self) -> dict:
        return {
            "seed": self.seed,
            "n_users": self.config.n_users,
            "n_objects": self.config.n_objects,
            "n_images": self.config.n_images,
            "n_groups": self.config.n_groups,
            "latent_rank": self.config.latent_rank,
            "noise": self.config.noise,
            "objects_per_image": self.config.objects_per_image,
            "popularity_exponent": self.config.popularity_exponent,
        }


def _quantize_by_quintile(scores_row: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split one user's sorted scores into 5 levels; return levels and the
    4 boundary values (midpoints between adjacent quintile groups)."""
    order = np.argsort(scores_row, kind="stable")
    chunks = np.array_split(order, 5)
    levels = np.empty(scores_row.size, dtype=float)
    for level, chunk in enumerate(chunks, start=1):
        levels[chunk] = level
    boundaries = np.empty(4)
    for j in range(4):
        lo = scores_row[chunks[j][-1]]
        hi = scores_row[chunks[j + 1][0]]
        boundaries[j] = 0.5 * (lo + hi)
    return levels, boundaries


def _map_level(scores: np.ndarray, boundaries: np.ndarray) -> np.ndarray:
    return np.searchsorted(boundaries, scores, side="right") + 1.0


def generate_corpus(cfg: CorpusConfig = CorpusConfig(), seed: int = 0) -> SyntheticCorpus:
    """Build the full synthetic corpus with dense ground-truth levels."""
    rng = np.random.default_rng(seed)
    u = rng.gamma(2.0, 0.5, size=(cfg.n_users, cfg.latent_rank))
    v = rng.gamma(2.0, 0.5, size=(cfg.n_objects, cfg.latent_rank))
    scores = u @ v.T + cfg.noise * rng.standard_normal((cfg.n_users, cfg.n_objects))

    levels = np.empty_like(scores)
    thresholds = np.empty((cfg.n_users, 4))
    for k in range(cfg.n_users):
        levels[k], thresholds[k] = _quantize_by_quintile(scores[k])

    # skewed object popularity; every object forced into at least one image
    ranks = rng.permutation(cfg.n_objects) + 1
    popularity = ranks.astype(float) ** (-cfg.popularity_exponent)
    popularity /= popularity.sum()
    image_objects = []
    for _ in range(cfg.n_images):
        objs = rng.choice(
            cfg.n_objects, size=cfg.objects_per_image, replace=False, p=popularity
        )
        image_objects.append(tuple(int(o) for o in sorted(objs)))
    present = set()
    for objs in image_objects:
        present.update(objs)
    missing_objs = [o for o in range(cfg.n_objects) if o not in present]
    for o in missing_objs:
        idx = int(rng.integers(cfg.n_images))
        image_objects[idx] = tuple(sorted(set(image_objects[idx]) | {o}))

    shuffled = rng.permutation(cfg.n_images)
    groups = tuple(
        tuple(int(i) for i in chunk) for chunk in np.array_split(shuffled, cfg.n_groups)
    )
    labels = tuple(f"obj_{i:03d}" for i in range(cfg.n_objects))
    return SyntheticCorpus(
        config=cfg,
        seed=seed,
        scores=scores,
        ground_truth=AttentionMatrix(levels),
        level_thresholds=thresholds,
        image_objects=tuple(image_objects),
        groups=groups,
        object_labels=labels,
    )


def sparsify(corpus: SyntheticCorpus, seed: int = 0) -> AttentionMatrix:
    """Per-user scenario sampling producing a masked attention matrix.

    Each user visits 2-4 random groups, keeps a random 30-70% of their
    images, and gets observed levels for the objects appearing there. The
    per-object score is the summed exposure weight divided by the object's
    image frequency, then mapped through the user's level boundaries.
    Users with zero observed objects are re-drawn.
    """
    cfg = corpus.config
    rng = np.random.default_rng(seed)
    n_users, n_objects = corpus.n_users, corpus.n_objects
    values = np.zeros((n_users, n_objects))
    mask = np.zeros((n_users, n_objects), dtype=bool)
    for k in range(n_users):
        for _attempt in range(100):
            a1 = int(rng.integers(cfg.group_low, cfg.group_high + 1))
            a1 = min(a1, cfg.n_groups)
            chosen_groups = rng.choice(cfg.n_groups, size=a1, replace=False)
            images = [i for g in chosen_groups for i in corpus.groups[g]]
            a2 = float(rng.uniform(cfg.keep_low, cfg.keep_high))
            n_keep = max(1, int(round(a2 * len(images))))
            kept = rng.choice(len(images), size=n_keep, replace=False)
            kept_images = [images[i] for i in kept]
            weight_sum = np.zeros(n_objects)
            count = np.zeros(n_objects)
            for img in kept_images:
                for obj in corpus.image_objects[img]:
                    weight_sum[obj] += corpus.scores[k, obj]
                    count[obj] += 1.0
            observed = count > 0
            if observed.any():
                break
        else:
            raise RuntimeError(f"could not draw a non-empty scenario for user {k}")
        s = np.zeros(n_objects)
        s[observed] = weight_sum[observed] / count[observed]
        values[k, observed] = _map_level(s[observed], corpus.level_thresholds[k])
        mask[k, observed] = True
    return AttentionMatrix(values, mask)


def save_matrix(path, matrix: AttentionMatrix, labels=None) -> None:
    """Write a matrix as CSV: header of object labels, empty cell = unobserved."""
    n_objects = matrix.n_objects
    if labels is None:
        labels = [f"obj_{i:03d}" for i in range(n_objects)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(labels))
        for u in range(matrix.n_users):
            row = []
            for i in range(n_objects):
                if matrix.mask[u, i]:
                    v = matrix.values[u, i]
                    row.append(str(int(v)) if float(v).is_integer() else repr(float(v)))
                else:
                    row.append("")
            writer.writerow(row)


def load_matrix(path) -> AttentionMatrix:
    """Read a CSV attention matrix; empty cells become unobserved entries."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty file") from None
        n_objects = len(header)
        rows, masks = [], []
        for r, row in enumerate(reader):
            if len(row) != n_objects:
                raise ConfigError(
                    f"{path}: row {r + 2} has {len(row)} cells, expected {n_objects}"
                )
            vals = np.zeros(n_objects)
            m = np.zeros(n_objects, dtype=bool)
            for c, cell in enumerate(row):
                cell = cell.strip()
                if not cell:
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise ConfigError(
                        f"{path}: malformed cell at row {r + 2}, column {c + 1}: {cell!r}"
                    ) from None
                if not 1.0 <= v <= 5.0:
                    raise ConfigError(
                        f"{path}: level out of range [1,5] at row {r + 2}, "
                        f"column {c + 1}: {v}"
                    )
                vals[c] = v
                m[c] = True
            rows.append(vals)
            masks.append(m)
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    return AttentionMatrix(np.array(rows), np.array(masks))
