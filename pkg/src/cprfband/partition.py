"""Dyadic partitions: split-direction samplers and cell geometry.

Axis indices are 0-based throughout.  All cell boundaries are exact binary
fractions, so membership and closeness computations use exact floor
arithmetic on ``x * 2**t`` with the single convention that coordinates
equal to 1.0 fall into the last cell (the floor is clamped to ``2**t - 1``).
"""

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb

import numpy as np

from .backend import kernels
from .errors import ConfigurationError, DomainError
from .rng import ensure_rng


@dataclass(frozen=True)
class SplitDirections:
    """Split directions along one branch: k entries in {0, ..., p-1}."""

    dirs: np.ndarray
    k: int
    p: int

    def __post_init__(self):
        dirs = np.asarray(self.dirs, dtype=np.int64)
        object.__setattr__(self, "dirs", dirs)
        if dirs.shape != (self.k,):
            raise ValueError(f"expected {self.k} directions, got shape {dirs.shape}")
        if self.k and (dirs.min() < 0 or dirs.max() >= self.p):
            raise ValueError("direction out of range")

    def counts(self) -> "SplitCounts":
        c = np.bincount(self.dirs, minlength=self.p)
        return SplitCounts(c, self.k)


@dataclass(frozen=True)
class SplitCounts:
    """Per-direction split tallies (S_1, ..., S_p) with sum k."""

    counts: np.ndarray
    k: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if counts.ndim != 1 or counts.min(initial=0) < 0:
            raise ValueError("counts must be a vector of nonnegative integers")
        if counts.sum() != self.k:
            raise ValueError(f"counts sum {counts.sum()} != k = {self.k}")

    @property
    def p(self) -> int:
        return len(self.counts)


@dataclass(frozen=True)
class EhrenfestConfig:
    """Particle-model parameters: b particles per container, slack delta."""

    b: int
    delta: float

    def __post_init__(self):
        if self.b < 1:
            raise ConfigurationError("b must be a positive integer")
        if self.delta <= 0:
            raise ConfigurationError("delta must be positive")

    def validate(self, p: int):
        if self.delta <= self.b / p:
            raise ConfigurationError(
                f"delta = {self.delta} must exceed b/p = {self.b / p}"
            )

    def bound_upper(self, p: int) -> float:
        """C1 = delta + p*b: S_l <= k/p + C1 on every branch."""
        return self.delta + p * self.b

    def bound_lower(self, p: int) -> float:
        """C2 = (p-1)(delta + p*b): S_l >= k/p - C2 on every branch."""
        return (p - 1) * (self.delta + p * self.b)


def _check_point(x, p=None):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DomainError("point must be one-dimensional")
    if p is not None and len(x) != p:
        raise DomainError(f"point has dimension {len(x)}, expected {p}")
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError("coordinates must lie in [0, 1]")
    return x


def dyadic_index(x, level):
    """Cell index of coordinate(s) x at dyadic level: floor(x * 2**level),
    clamped so that x == 1.0 belongs to the last cell."""
    idx = np.floor(np.asarray(x, dtype=np.float64) * 2.0**level).astype(np.int64)
    return np.minimum(idx, 2**level - 1)


@dataclass(frozen=True)
class DyadicCell:
    """The depth-k dyadic cell containing ``anchor``; axis l spans
    ``2**-S_l * (idx, idx + 1]`` with idx the clamped floor index."""

    anchor: np.ndarray
    counts: SplitCounts

    def __post_init__(self):
        object.__setattr__(self, "anchor", _check_point(self.anchor, self.counts.p))

    @property
    def k(self) -> int:
        return self.counts.k

    @property
    def volume(self) -> float:
        return 2.0 ** -self.k

    def axis_interval(self, axis):
        s = int(self.counts.counts[axis])
        idx = int(dyadic_index(self.anchor[axis], s))
        return idx * 2.0**-s, (idx + 1) * 2.0**-s

    def axis_lengths(self) -> np.ndarray:
        return 2.0 ** -self.counts.counts.astype(np.float64)

    def contains(self, x) -> bool:
        x = _check_point(x, self.counts.p)
        s = self.counts.counts
        for axis in range(self.counts.p):
            lvl = int(s[axis])
            if dyadic_index(x[axis], lvl) != dyadic_index(self.anchor[axis], lvl):
                return False
        return True


@dataclass(frozen=True)
class ClosenessVector:
    """Per-axis deepest dyadic level (capped at k) at which two points
    share a cell."""

    c: np.ndarray
    k: int

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.int64)
        object.__setattr__(self, "c", c)
        if c.min(initial=0) < 0 or c.max(initial=0) > self.k:
            raise ValueError("closeness entries must lie in {0, ..., k}")

    def ordered(self) -> np.ndarray:
        return np.sort(self.c)


def sample_uniform_splits(k, p, rng) -> SplitDirections:
    """Draw k i.i.d. uniform split directions on {0, ..., p-1}."""
    if p < 1:
        raise DomainError("dimension p must be at least 1")
    if k < 0:
        raise DomainError("depth k must be nonnegative")
    rng = ensure_rng(rng)
    dirs = rng.integers(0, p, size=k)
    return SplitDirections(dirs, k, p)


def sample_ehrenfest_splits(k, p, cfg: EhrenfestConfig, rng, diagnostics=None) -> SplitDirections:
    """Draw one branch of the Ehrenfest particle model.

    ``diagnostics``, if given, is a dict whose ``"fallbacks"`` entry is
    incremented whenever the eligible destination set was empty and the
    least-split fallback move was taken.
    """
    dirs, fb = sample_ehrenfest_branches(k, p, cfg, rng, size=1)
    if diagnostics is not None:
        diagnostics["fallbacks"] = diagnostics.get("fallbacks", 0) + fb
    return SplitDirections(dirs[0], k, p)


def sample_ehrenfest_branches(k, p, cfg: EhrenfestConfig, rng, size):
    """Vectorized branch sampler: returns (dirs (size, k), fallback count)."""
    if p < 1:
        raise DomainError("dimension p must be at least 1")
    if k < 0:
        raise DomainError("depth k must be nonnegative")
    cfg.validate(p)
    rng = ensure_rng(rng)
    u = rng.random((size, k, 2))
    return kernels.ehrenfest_branches(k, p, cfg.b, cfg.delta, u)


def closeness_vector(x1, x2, k) -> ClosenessVector:
    """Componentwise max dyadic co-residence level of x1 and x2, capped at k."""
    x1 = _check_point(x1)
    x2 = _check_point(x2, len(x1))
    c = np.empty(len(x1), dtype=np.int64)
    for axis in range(len(x1)):
        t = 0
        while t < k and dyadic_index(x1[axis], t + 1) == dyadic_index(x2[axis], t + 1):
            t += 1
        c[axis] = t
    return ClosenessVector(c, k)


def intersection_volume(x1, s1: SplitCounts, x2, s2: SplitCounts) -> float:
    """Exact Lebesgue volume of the intersection of the two dyadic cells
    anchored at x1 and x2 with split counts s1 and s2."""
    if s1.k != s2.k:
        raise ValueError(f"depth mismatch: {s1.k} != {s2.k}")
    if s1.p != s2.p:
        raise ValueError(f"dimension mismatch: {s1.p} != {s2.p}")
    x1 = _check_point(x1, s1.p)
    x2 = _check_point(x2, s2.p)
    a, b = s1.counts, s2.counts
    m = np.minimum(a, b)
    for axis in range(s1.p):
        lvl = int(m[axis])
        if dyadic_index(x1[axis], lvl) != dyadic_index(x2[axis], lvl):
            return 0.0
    return float(2.0 ** -np.maximum(a, b).sum())


def cell_diameter(s: SplitCounts) -> float:
    """Euclidean diameter of a cell with the given per-axis split counts."""
    return float(np.sqrt(np.sum(4.0 ** -s.counts.astype(np.float64))))


def enumerate_omega_s(k, p) -> np.ndarray:
    """All nondecreasing vectors in {0, ..., k}**p in lexicographic order,
    as an (C(k+p, p), p) integer array.  Row i corresponds to tau = i + 1."""
    if p < 1:
        raise DomainError("dimension p must be at least 1")
    if k < 0:
        raise DomainError("depth k must be nonnegative")
    rows = list(combinations_with_replacement(range(k + 1), p))
    out = np.array(rows, dtype=np.int64)
    assert out.shape == (comb(k + p, p), p)
    return out


def omega_rank_lut(k, p):
    """Lookup table from base-(k+1) codes of ordered vectors to row index
    in ``enumerate_omega_s(k, p)``; -1 for codes of unordered vectors."""
    omega = enumerate_omega_s(k, p)
    weights = (k + 1) ** np.arange(p, dtype=np.int64)
    lut = np.full((k + 1) ** p, -1, dtype=np.int64)
    lut[omega @ weights] = np.arange(len(omega))
    return lut, weights
