"""Centered purely random trees and their aggregation into a forest.

A fitted forest is an incomplete generalized U-statistic: an average of
per-subsample tree estimates, where each tree is an independent dyadic
partition of the unit cube that never looks at the data.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .backend import kernels
from .errors import ConfigurationError, DomainError, EstimationError, ParseError
from .partition import DyadicCell, EhrenfestConfig, SplitCounts, dyadic_index
from .rng import ensure_rng, stream

KINDS = ("uniform", "ehrenfest")
MODES = ("fixed", "poisson")


@dataclass(frozen=True)
class TrainingSample:
    """Regression sample: covariates X in [0,1]^p and responses Y."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        Y = np.ascontiguousarray(self.Y, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("X must be a (n, p) array")
        if Y.shape != (X.shape[0],):
            raise ValueError("Y must have one entry per row of X")
        if X.size and (X.min() < 0.0 or X.max() > 1.0):
            raise DomainError("covariates must lie in [0, 1]")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @classmethod
    def from_csv(cls, path) -> "TrainingSample":
        """Read columns x1..xp,y (header required)."""
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline()
            if not header:
                raise ParseError("empty file", line=1)
            cols = [c.strip() for c in header.strip().split(",")]
            p = len(cols) - 1
            expected = [f"x{i + 1}" for i in range(p)] + ["y"]
            if p < 1 or cols != expected:
                raise ParseError(
                    f"expected header {','.join(expected) if p >= 1 else 'x1,...,y'}, "
                    f"got {header.strip()!r}",
                    line=1,
                )
            xs, ys = [], []
            for lineno, raw in enumerate(fh, start=2):
                if not raw.strip():
                    continue
                parts = raw.strip().split(",")
                if len(parts) != p + 1:
                    raise ParseError(
                        f"expected {p + 1} fields, got {len(parts)}", line=lineno
                    )
                try:
                    vals = [float(v) for v in parts]
                except ValueError as exc:
                    raise ParseError(str(exc), line=lineno) from None
                if any(not 0.0 <= v <= 1.0 for v in vals[:p]):
                    raise ParseError("coordinate outside [0, 1]", line=lineno)
                xs.append(vals[:p])
                ys.append(vals[p])
        if not xs:
            raise ParseError("no data rows", line=2)
        return cls(np.array(xs), np.array(ys))

    def to_csv(self, path):
        header = ",".join([f"x{i + 1}" for i in range(self.p)] + ["y"])
        data = np.column_stack([self.X, self.Y])
        np.savetxt(path, data, delimiter=",", header=header, comments="")


@dataclass(frozen=True)
class CenteredTree:
    """A depth-k complete dyadic tree, one split direction per internal
    node in level order (2**k - 1 entries)."""

    k: int
    p: int
    dirs: np.ndarray
    kind: str = "uniform"

    def __post_init__(self):
        dirs = np.ascontiguousarray(self.dirs, dtype=np.int64)
        object.__setattr__(self, "dirs", dirs)
        if dirs.shape != (2**self.k - 1,):
            raise ValueError("dirs must have 2**k - 1 level-order entries")
        if self.k and (dirs.min() < 0 or dirs.max() >= self.p):
            raise ValueError("split direction out of range")

    def branch_counts(self, x0) -> SplitCounts:
        """Split counts along the root-to-leaf path containing x0."""
        _, counts = self._walk(x0)
        return SplitCounts(counts, self.k)

    def _walk(self, x0):
        x0 = np.asarray(x0, dtype=np.float64)
        if x0.shape != (self.p,):
            raise DomainError(f"point must have dimension {self.p}")
        if np.any(x0 < 0.0) or np.any(x0 > 1.0):
            raise DomainError("point outside [0, 1]^p")
        bits = dyadic_index(x0, self.k).reshape(1, self.p)
        node = 0
        counts = np.zeros(self.p, dtype=np.int64)
        for _ in range(self.k):
            d = int(self.dirs[node])
            bit = (int(bits[0, d]) >> (self.k - 1 - int(counts[d]))) & 1
            counts[d] += 1
            node = 2 * node + 1 + bit
        return node - (2**self.k - 1), counts


def build_tree(kind, k, p, rng, ehrenfest: EhrenfestConfig | None = None) -> CenteredTree:
    """Build one centered tree of depth k in dimension p."""
    if kind not in KINDS:
        raise ConfigurationError(f"unknown forest kind {kind!r}")
    if p < 1:
        raise DomainError("dimension p must be at least 1")
    rng = ensure_rng(rng)
    n_nodes = 2**k - 1
    if kind == "uniform":
        dirs = rng.integers(0, p, size=n_nodes)
    else:
        if ehrenfest is None:
            raise ConfigurationError("ehrenfest kind requires an EhrenfestConfig")
        ehrenfest.validate(p)
        u = rng.random((1, n_nodes, 2))
        dirs, _ = kernels.ehrenfest_trees(k, p, ehrenfest.b, ehrenfest.delta, u)
        dirs = dirs[0]
    return CenteredTree(k, p, dirs, kind)


def locate_cell(tree: CenteredTree, x0):
    """Return (DyadicCell, leaf index) for the leaf containing x0."""
    leaf, counts = tree._walk(x0)
    cell = DyadicCell(np.asarray(x0, dtype=np.float64), SplitCounts(counts, tree.k))
    return cell, int(leaf)


def tree_predict(tree: CenteredTree, sample: TrainingSample, subset, x0) -> float:
    """Subsample mean of Y over the leaf cell of x0; 0 if the cell holds
    no subsampled observation."""
    subset = np.asarray(subset, dtype=np.int64)
    leaf, _ = tree._walk(x0)
    bits = dyadic_index(sample.X[subset], tree.k)
    leaves = kernels.leaf_indices(tree.dirs, bits, tree.k)
    mask = leaves == leaf
    hits = int(mask.sum())
    if hits == 0:
        return 0.0
    return float(sample.Y[subset][mask].sum() / hits)


@dataclass(frozen=True)
class ForestConfig:
    """Forest hyperparameters; ``seed`` drives all forest randomness."""

    kind: str
    k: int
    n_trees: int
    r_n: int
    mode: str = "fixed"
    seed: int = 0
    ehrenfest: EhrenfestConfig | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown forest kind {self.kind!r}")
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown subsampling mode {self.mode!r}")
        if self.k < 0 or self.n_trees < 1 or self.r_n < 1:
            raise ConfigurationError("k >= 0, n_trees >= 1 and r_n >= 1 required")
        if self.kind == "ehrenfest" and self.ehrenfest is None:
            raise ConfigurationError("ehrenfest kind requires an EhrenfestConfig")

    def to_dict(self):
        d = {
            "kind": self.kind,
            "k": self.k,
            "n_trees": self.n_trees,
            "r_n": self.r_n,
            "mode": self.mode,
            "seed": self.seed,
        }
        if self.ehrenfest is not None:
            d["ehrenfest"] = {"b": self.ehrenfest.b, "delta": self.ehrenfest.delta}
        return d

    @classmethod
    def from_dict(cls, d):
        ehr = d.get("ehrenfest")
        return cls(
            kind=d["kind"],
            k=int(d["k"]),
            n_trees=int(d["n_trees"]),
            r_n=int(d["r_n"]),
            mode=d.get("mode", "fixed"),
            seed=int(d["seed"]),
            ehrenfest=EhrenfestConfig(int(ehr["b"]), float(ehr["delta"])) if ehr else None,
        )


@dataclass(frozen=True)
class FittedForest:
    """Trees plus the subsample index sets they were fitted on."""

    config: ForestConfig
    sample: TrainingSample
    tree_dirs: np.ndarray  # (n_trees, 2**k - 1) level-order directions
    subsets: np.ndarray  # (n_trees, r_n) row indices into the sample
    _leaf_stats: list = field(default_factory=list, compare=False, repr=False)

    @property
    def n_trees(self) -> int:
        return self.tree_dirs.shape[0]

    @property
    def trees(self):
        return [
            CenteredTree(self.config.k, self.sample.p, self.tree_dirs[j], self.config.kind)
            for j in range(self.n_trees)
        ]

    def _stats(self):
        """Per-tree (sums, counts) over the 2**k leaves, cached."""
        if not self._leaf_stats:
            k = self.config.k
            n_leaves = 2**k
            bits = dyadic_index(self.sample.X, k)
            sums = np.empty((self.n_trees, n_leaves))
            cnts = np.empty((self.n_trees, n_leaves), dtype=np.int64)
            for j in range(self.n_trees):
                idx = self.subsets[j]
                leaves = kernels.leaf_indices(self.tree_dirs[j], bits[idx], k)
                sums[j] = np.bincount(leaves, weights=self.sample.Y[idx], minlength=n_leaves)
                cnts[j] = np.bincount(leaves, minlength=n_leaves)
            self._leaf_stats.append((sums, cnts))
        return self._leaf_stats[0]


def _draw_subsets(n, r_n, n_subsets, rng):
    out = np.empty((n_subsets, r_n), dtype=np.int64)
    for j in range(n_subsets):
        out[j] = rng.choice(n, size=r_n, replace=False)
    return out


def fit_forest(config: ForestConfig, sample: TrainingSample, subsets=None) -> FittedForest:
    """Draw subsample index sets and one independent tree per subset.

    ``subsets`` overrides the random subset draw with explicit index sets
    (used to force the complete U-statistic in tests); trees are still
    seeded per subset index.
    """
    n, p = sample.n, sample.p
    if config.r_n > n:
        raise ConfigurationError(f"r_n = {config.r_n} exceeds sample size {n}")
    if config.ehrenfest is not None:
        config.ehrenfest.validate(p)

    if subsets is not None:
        subsets = np.asarray(subsets, dtype=np.int64)
        if subsets.ndim != 2 or subsets.shape[1] != config.r_n:
            raise ConfigurationError("explicit subsets must be (m, r_n)")
        n_subsets = subsets.shape[0]
    else:
        if config.mode == "poisson":
            n_subsets = int(stream(config.seed, rngmod.FOREST).poisson(config.n_trees))
            if n_subsets == 0:
                raise EstimationError("poissonized subset count came up empty")
        else:
            n_subsets = config.n_trees
        subsets = _draw_subsets(n, config.r_n, n_subsets, stream(config.seed, rngmod.SUBSETS))

    n_nodes = 2**config.k - 1
    dirs = np.empty((n_subsets, n_nodes), dtype=np.int64)
    for j in range(n_subsets):
        tree_rng = stream(config.seed, rngmod.TREES, j)
        if config.kind == "uniform":
            dirs[j] = tree_rng.integers(0, p, size=n_nodes)
        else:
            u = tree_rng.random((1, n_nodes, 2))
            dirs[j] = kernels.ehrenfest_trees(
                config.k, p, config.ehrenfest.b, config.ehrenfest.delta, u
            )[0][0]
    return FittedForest(config, sample, dirs, subsets)


def forest_predict(forest: FittedForest, x) -> np.ndarray | float:
    """Average tree prediction at one point or a (m, p) grid of points."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = x.reshape(1, -1) if single else x
    if pts.shape[1] != forest.sample.p:
        raise DomainError(f"points must have dimension {forest.sample.p}")
    if pts.size and (pts.min() < 0.0 or pts.max() > 1.0):
        raise DomainError("points outside [0, 1]^p")

    k = forest.config.k
    bits = dyadic_index(pts, k)
    sums, cnts = forest._stats()
    leaves = kernels.forest_leaf_indices(forest.tree_dirs, bits, k)
    acc = np.zeros(pts.shape[0])
    for j in range(forest.n_trees):
        lv = leaves[j]
        c = cnts[j, lv]
        acc += np.where(c > 0, sums[j, lv] / np.maximum(c, 1), 0.0)
    pred = acc / forest.n_trees
    return float(pred[0]) if single else pred


def save_forest_manifest(forest: FittedForest, path):
    """Persist seeds and config; trees are rebuilt deterministically."""
    doc = {
        "format": "cprfband-forest",
        "version": 1,
        "config": forest.config.to_dict(),
        "n": forest.sample.n,
        "p": forest.sample.p,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_forest_manifest(path, sample: TrainingSample) -> FittedForest:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "cprfband-forest" or doc.get("version") != 1:
        raise ParseError(f"not a cprfband forest manifest: {path}")
    if doc["n"] != sample.n or doc["p"] != sample.p:
        raise ConfigurationError(
            f"manifest was fitted on a ({doc['n']}, {doc['p']}) sample, "
            f"got ({sample.n}, {sample.p})"
        )
    return fit_forest(ForestConfig.from_dict(doc["config"]), sample)
