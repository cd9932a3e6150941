"""Finite discrete distributions and the algebra used for max-of-path-sums.

Distributions are kept exact: supports are sorted float arrays, atoms closer
than MERGE_TOL are merged, and every operation (convolution, max, mixture)
preserves total probability to within PROB_TOL.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

MERGE_TOL = 1e-9     # atoms closer than this merge into one
PROB_TOL = 1e-9      # probabilities must sum to 1 within this
SUPPORT_CAP = 4096   # hard cap on atoms per intermediate distribution

# Below these sizes plain-python loops beat numpy's per-call overhead; the
# contraction executor spends most of its time combining 2-30 atom dists.
_SMALL_PRODUCT = 48    # add_dists: atoms in the outer sum
_SMALL_GRID = 128      # max_dists: atoms across both supports


class SupportCapExceeded(RuntimeError):
    """An operation would produce a distribution with too many atoms."""


@dataclass(frozen=True)
class Dist:
    """Discrete distribution: strictly increasing support, positive probs."""

    support: np.ndarray
    probs: np.ndarray

    def __len__(self) -> int:
        return len(self.support)

    @property
    def is_point(self) -> bool:
        return len(self.support) == 1

    def mean(self) -> float:
        return float(self.support @ self.probs)

    def var(self) -> float:
        m = self.mean()
        return float(((self.support - m) ** 2) @ self.probs)

    def to_pairs(self) -> list[tuple[float, float]]:
        return [(float(v), float(p)) for v, p in zip(self.support, self.probs)]

    def __repr__(self) -> str:  # compact, for logs and test failures
        pairs = ", ".join(f"{v:g}:{p:.4g}" for v, p in self.to_pairs())
        return f"Dist({pairs})"


def _canonical(values: np.ndarray, probs: np.ndarray, cap: int) -> Dist:
    """Sort, merge atoms within MERGE_TOL, drop zero-probability atoms."""
    order = np.argsort(values, kind="stable")
    values = values[order]
    probs = probs[order]
    if len(values) > 1:
        # group boundaries where consecutive atoms are farther apart than tol
        new_group = np.empty(len(values), dtype=bool)
        new_group[0] = True
        np.greater(np.diff(values), MERGE_TOL, out=new_group[1:])
        idx = np.flatnonzero(new_group)
        values = values[idx]
        probs = np.add.reduceat(probs, idx)
    keep = probs > 0.0
    if not keep.all():
        values = values[keep]
        probs = probs[keep]
    if len(values) > cap:
        raise SupportCapExceeded(
            f"distribution support {len(values)} exceeds cap {cap}"
        )
    return Dist(values, probs)


def make_dist(values, probs, cap: int = SUPPORT_CAP) -> Dist:
    """Validating constructor from arbitrary value/probability sequences."""
    values = np.asarray(values, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    if values.shape != probs.shape or values.ndim != 1 or len(values) == 0:
        raise ValueError("values and probs must be equal-length 1-d sequences")
    if np.any(probs < 0.0):
        raise ValueError("negative probability")
    total = probs.sum()
    if abs(total - 1.0) > PROB_TOL:
        raise ValueError(f"probabilities sum to {total}, not 1")
    return _canonical(values, probs / total, cap)


def point(value: float) -> Dist:
    """Point mass at a single value."""
    return Dist(np.array([float(value)]), np.array([1.0]))


def discretize_normal(mu: float, sigma: float, bins: int = 4) -> Dist:
    """Discretize Normal(mu, sigma) into equal-probability quantile cells.

    Each cell becomes one atom placed at the conditional mean of the cell, so
    the discretized distribution preserves the overall mean exactly.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0 or bins == 1:
        return point(mu)
    edges = norm.ppf(np.linspace(0.0, 1.0, bins + 1))
    dens = norm.pdf(edges)
    dens[0] = 0.0    # pdf at -inf
    dens[-1] = 0.0   # pdf at +inf
    cell_prob = 1.0 / bins
    z = (dens[:-1] - dens[1:]) / cell_prob  # E[Z | cell] for standard normal
    return Dist(mu + sigma * z, np.full(bins, cell_prob))


def _merge_sorted(items, cap: int) -> Dist:
    """Canonicalize already-sorted (value, prob) pairs without numpy."""
    vals: list[float] = []
    probs: list[float] = []
    last = None
    for v, p in items:
        if last is not None and v - last <= MERGE_TOL:
            probs[-1] += p
        else:
            vals.append(v)
            probs.append(p)
        last = v
    if len(vals) > cap:
        raise SupportCapExceeded(
            f"distribution support {len(vals)} exceeds cap {cap}"
        )
    return Dist(np.array(vals), np.array(probs))


def add_dists(a: Dist, b: Dist, cap: int = SUPPORT_CAP) -> Dist:
    """Distribution of X + Y for independent X ~ a, Y ~ b."""
    if a.is_point:
        return Dist(b.support + a.support[0], b.probs)
    if b.is_point:
        return Dist(a.support + b.support[0], a.probs)
    if len(a) * len(b) <= _SMALL_PRODUCT:
        bv = b.support.tolist()
        bp = b.probs.tolist()
        acc: dict[float, float] = {}
        get = acc.get
        for va, pa in zip(a.support.tolist(), a.probs.tolist()):
            for vb, pb in zip(bv, bp):
                s = va + vb
                acc[s] = get(s, 0.0) + pa * pb
        return _merge_sorted(sorted(acc.items()), cap)
    values = np.add.outer(a.support, b.support).ravel()
    probs = np.multiply.outer(a.probs, b.probs).ravel()
    return _canonical(values, probs, cap)


def max_dists(a: Dist, b: Dist, cap: int = SUPPORT_CAP) -> Dist:
    """Distribution of max(X, Y) for independent X ~ a, Y ~ b.

    Computed on the merged support via the product of CDFs.
    """
    if a.is_point and b.is_point:
        return point(max(a.support[0], b.support[0]))
    if len(a) + len(b) <= _SMALL_GRID:
        av = a.support.tolist()
        ap = a.probs.tolist()
        bv = b.support.tolist()
        bp = b.probs.tolist()
        na, nb = len(av), len(bv)
        i = j = 0
        ca = cb = prev = 0.0
        vals: list[float] = []
        probs: list[float] = []
        while i < na or j < nb:
            g = av[i] if j >= nb or (i < na and av[i] <= bv[j]) else bv[j]
            edge = g + MERGE_TOL
            while i < na and av[i] <= edge:
                ca += ap[i]
                i += 1
            while j < nb and bv[j] <= edge:
                cb += bp[j]
                j += 1
            joint = ca * cb
            p = joint - prev
            prev = joint
            if p > 0.0:
                vals.append(g)
                probs.append(p)
        if len(vals) > cap:
            raise SupportCapExceeded(
                f"distribution support {len(vals)} exceeds cap {cap}"
            )
        return Dist(np.array(vals), np.array(probs))
    grid = np.union1d(a.support, b.support)
    if len(grid) > 1:
        keep = np.empty(len(grid), dtype=bool)
        keep[0] = True
        np.greater(np.diff(grid), MERGE_TOL, out=keep[1:])
        grid = grid[keep]
    cdf = np.cumsum
    # CDF of each input evaluated on the grid (tolerant to merged atoms)
    ia = np.searchsorted(a.support, grid + MERGE_TOL)
    ib = np.searchsorted(b.support, grid + MERGE_TOL)
    ca = np.concatenate(([0.0], cdf(a.probs)))[ia]
    cb = np.concatenate(([0.0], cdf(b.probs)))[ib]
    joint = ca * cb
    probs = np.diff(joint, prepend=0.0)
    return _canonical(grid, probs, cap)


def mix_dists(dists: list[Dist], weights, cap: int = SUPPORT_CAP) -> Dist:
    """Probability mixture of distributions with the given weights."""
    weights = np.asarray(weights, dtype=np.float64)
    if len(dists) != len(weights) or len(dists) == 0:
        raise ValueError("need one weight per distribution")
    if abs(weights.sum() - 1.0) > PROB_TOL:
        raise ValueError("mixture weights must sum to 1")
    values = np.concatenate([d.support for d in dists])
    probs = np.concatenate([d.probs * w for d, w in zip(dists, weights)])
    return _canonical(values, probs, cap)


def dists_close(a: Dist, b: Dist, tol: float = MERGE_TOL) -> bool:
    """Atom-wise equality after aligning supports within tol."""
    i = j = 0
    while i < len(a) or j < len(b):
        va = a.support[i] if i < len(a) else np.inf
        vb = b.support[j] if j < len(b) else np.inf
        if abs(va - vb) <= tol:
            if abs(a.probs[i] - b.probs[j]) > tol:
                return False
            i += 1
            j += 1
        elif va < vb:
            if a.probs[i] > tol:
                return False
            i += 1
        else:
            if b.probs[j] > tol:
                return False
            j += 1
    return True
