"""Constrained Bayesian optimization for policy weights.

The domain is a probability simplex block (the feature mix) optionally
followed by one box-bounded scalar (the cost multiplier). A small Gaussian
process with a squared-exponential kernel models the noisy objective;
candidates are proposed by maximizing expected improvement over a random
multistart drawn from the constrained domain. A pure random-search mode is
kept for testing and as a fallback.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .beliefs import GOAL_SETTING, TERMINATE, rollout
from .envs import EnvSpec, sample_instance
from .features import FeatureEngine, Weights, scale_cap
from .policies import PolicyConfig, make_policy

_EXPLORE = 10          # pure-random evaluations before the GP takes over
_MULTISTART = 512      # candidate draws per acquisition maximization
_REFIT_EVERY = 10      # iterations between noise refits
_LENGTH_SCALE = 0.25   # SE kernel length scale in normalized coordinates


@dataclass(frozen=True)
class Constraint:
    """A simplex block of given size plus an optional trailing box scalar."""

    simplex: int
    box: tuple[float, float] | None = None

    def __post_init__(self):
        if self.simplex < 0:
            raise ValueError("simplex size cannot be negative")
        if self.simplex == 0 and self.box is None:
            raise ValueError("constraint describes an empty domain")
        if self.box is not None and not self.box[0] < self.box[1]:
            raise ValueError(f"bad box bounds {self.box}")

    @property
    def dimension(self) -> int:
        return self.simplex + (1 if self.box is not None else 0)


def sample_constrained(rng: np.random.Generator,
                       constraint: Constraint) -> np.ndarray:
    """Uniform draw: exponential-normalization on the simplex, uniform box."""
    parts = []
    if constraint.simplex:
        e = rng.exponential(1.0, constraint.simplex)
        parts.append(e / e.sum())
    if constraint.box is not None:
        lo, hi = constraint.box
        parts.append(rng.uniform(lo, hi, 1))
    return np.concatenate(parts)


@dataclass
class OptimizeSpec:
    constraint: Constraint
    objective: object                  # callable: point -> float (noisy)
    iterations: int = 100
    eval_episodes: int = 100           # bookkeeping only; objectives own it
    seed: int = 0
    mode: str = "gp"                   # gp | random

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.eval_episodes < 1:
            raise ValueError("eval_episodes must be >= 1")
        if self.mode not in ("gp", "random"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class OptimizeResult:
    best_weights: np.ndarray
    best_objective_estimate: float
    history: list = field(default_factory=list)  # (point, estimate) pairs


def _normalize(X: np.ndarray, constraint: Constraint) -> np.ndarray:
    """Map the box coordinate into [0, 1] so kernel distances are balanced."""
    Z = X.copy()
    if constraint.box is not None:
        lo, hi = constraint.box
        Z[:, -1] = (Z[:, -1] - lo) / (hi - lo)
    return Z


def _kernel(A: np.ndarray, B: np.ndarray, sf2: float) -> np.ndarray:
    d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
    return sf2 * np.exp(-d2 / (2 * _LENGTH_SCALE ** 2))


def _fit_noise(K: np.ndarray, y: np.ndarray, sf2: float) -> float:
    """Pick the observation-noise variance by maximum marginal likelihood."""
    n = len(y)
    best_noise, best_ll = sf2 * 0.1, -np.inf
    for frac in (1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.25, 0.5, 1.0):
        noise = sf2 * frac + 1e-10
        Kn = K + noise * np.eye(n)
        try:
            L = np.linalg.cholesky(Kn)
        except np.linalg.LinAlgError:
            continue
        alpha = np.linalg.solve(L.T, np.linalg.solve(L, y))
        ll = (-0.5 * y @ alpha - np.log(np.diag(L)).sum()
              - 0.5 * n * math.log(2 * math.pi))
        if ll > best_ll:
            best_ll, best_noise = ll, noise
    return best_noise


class _GP:
    """Squared-exponential GP posterior over normalized points."""

    def __init__(self, Z: np.ndarray, y: np.ndarray, noise: float,
                 sf2: float):
        self.Z = Z
        self.mean = y.mean()
        self.sf2 = sf2
        K = _kernel(Z, Z, sf2) + noise * np.eye(len(y))
        self.L = np.linalg.cholesky(K)
        self.alpha = np.linalg.solve(self.L.T,
                                     np.linalg.solve(self.L, y - self.mean))

    def posterior(self, Zq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        Ks = _kernel(Zq, self.Z, self.sf2)
        mu = self.mean + Ks @ self.alpha
        v = np.linalg.solve(self.L, Ks.T)
        var = np.maximum(self.sf2 - (v ** 2).sum(axis=0), 1e-12)
        return mu, np.sqrt(var)


_erf = np.vectorize(math.erf)


def _expected_improvement(mu, sigma, best):
    z = (mu - best) / sigma
    cdf = 0.5 * (1 + _erf(z / math.sqrt(2)))
    pdf = np.exp(-0.5 * z ** 2) / math.sqrt(2 * math.pi)
    return (mu - best) * cdf + sigma * pdf


def optimize(opt: OptimizeSpec, log=None) -> OptimizeResult:
    """Maximize a noisy objective over the constrained domain."""
    rng = np.random.default_rng(opt.seed)
    X: list[np.ndarray] = []
    y: list[float] = []
    noise = None

    def record(x, v):
        if not math.isfinite(v):
            raise ValueError(f"objective returned non-finite value {v!r} "
                             f"at {x}")
        X.append(x)
        y.append(v)
        if log is not None:
            log(len(y), x, v)

    for it in range(opt.iterations):
        if opt.mode == "random" or it < min(_EXPLORE, opt.iterations):
            x = sample_constrained(rng, opt.constraint)
        else:
            Xa = np.array(X)
            ya = np.array(y)
            Z = _normalize(Xa, opt.constraint)
            sf2 = max(float(ya.var()), 1e-8)
            if noise is None or it % _REFIT_EVERY == 0:
                noise = _fit_noise(_kernel(Z, Z, sf2), ya - ya.mean(), sf2)
            gp = _GP(Z, ya, noise, sf2)
            cands = np.array([sample_constrained(rng, opt.constraint)
                              for _ in range(_MULTISTART)])
            mu, sigma = gp.posterior(_normalize(cands, opt.constraint))
            ei = _expected_improvement(mu, sigma, max(y))
            x = cands[int(np.argmax(ei))]
        record(x, float(opt.objective(x)))

    best = int(np.argmax(y))
    return OptimizeResult(X[best], y[best], list(zip(X, y)))


# ---------------------------------------------------------------------------
# Weight training
# ---------------------------------------------------------------------------

def _mean_rr(policy, spec: EnvSpec, seeds, hierarchical: bool) -> float:
    total = 0.0
    for s in seeds:
        total += rollout(policy, spec, sample_instance(spec, s),
                         hierarchical=hierarchical).rr
    return total / len(seeds)


def _goal_setting_only(w_high: Weights, spec: EnvSpec, engine: FeatureEngine):
    """High-level policy with a vacuous low level: commit, then route."""
    from .policies import select_hier

    def sel(b):
        if b.phase == GOAL_SETTING:
            return select_hier(b, spec, w_high, None, engine)
        return TERMINATE

    return sel


def train_bmps(spec: EnvSpec, mode: str = "flat", iterations: int = 100,
               episodes_per_eval: int = 100, seed: int = 0,
               low_cost_mode: str = "weighted", opt_mode: str = "gp",
               out_dir=None) -> PolicyConfig:
    """Fit BMPS weights by maximizing mean rollout RR.

    flat: one optimization over the flat weight vector. hier: the
    goal-setting weights are fit first against goal-setting-only rollouts,
    then the goal-achievement weights against full hierarchical rollouts
    with the high level frozen. Every objective call consumes a fresh
    block of instance seeds from a deterministic counter.
    """
    if mode not in ("flat", "hier"):
        raise ValueError(f"mode must be flat or hier, got {mode!r}")
    if mode == "hier" and not spec.hierarchical_compatible:
        raise ValueError(f"{spec.name} is not hierarchically decomposable")
    engine = FeatureEngine(spec)
    counter = {"n": 0}
    base = 10_000_000 + seed * 1_000_003
    lines: list[str] = []

    def fresh_seeds():
        start = base + counter["n"]
        counter["n"] += episodes_per_eval
        return range(start, start + episodes_per_eval)

    def logger(tag):
        def log(i, x, v):
            lines.append(f"{tag}\t{i}\t{np.round(x, 6).tolist()}\t{v:.4f}")
        return log

    def run(tag, constraint, objective):
        return optimize(OptimizeSpec(constraint, objective,
                                     iterations=iterations,
                                     eval_episodes=episodes_per_eval,
                                     seed=seed, mode=opt_mode),
                        log=logger(tag))

    if mode == "flat":
        constraint = Constraint(3, (1.0, scale_cap(spec, "flat")))

        def objective(x):
            w = Weights("flat", tuple(x[:3]), float(x[3]))
            pol = make_policy(PolicyConfig("flat_bmps", flat=w), spec, engine)
            return _mean_rr(pol, spec, fresh_seeds(), hierarchical=False)

        res = run("flat", constraint, objective)
        w = Weights("flat", tuple(res.best_weights[:3]),
                    float(res.best_weights[3]))
        cfg = PolicyConfig("flat_bmps", flat=w)
    else:
        # degenerate caps (tiny envs) still need a nonempty box
        hi_cap = max(scale_cap(spec, "high"), 1.0 + 1e-6)
        lo_cap = max(max(scale_cap(spec, "low", goal=g) for g in spec.goals),
                     1.0 + 1e-6)

        def high_objective(x):
            w = Weights("high", tuple(x[:2]), float(x[2]))
            sel = _goal_setting_only(w, spec, engine)
            return _mean_rr(sel, spec, fresh_seeds(), hierarchical=True)

        res_hi = run("high", Constraint(2, (1.0, hi_cap)), high_objective)
        w_high = Weights("high", tuple(res_hi.best_weights[:2]),
                         float(res_hi.best_weights[2]))

        def low_objective(x):
            w = Weights("low", tuple(x[:3]), float(x[3]))
            pol = make_policy(
                PolicyConfig("hier_bmps", high=w_high, low=w,
                             low_cost_mode=low_cost_mode), spec, engine)
            return _mean_rr(pol, spec, fresh_seeds(), hierarchical=True)

        res_lo = run("low", Constraint(3, (1.0, lo_cap)), low_objective)
        w_low = Weights("low", tuple(res_lo.best_weights[:3]),
                        float(res_lo.best_weights[3]))
        cfg = PolicyConfig("hier_bmps", high=w_high, low=w_low,
                           low_cost_mode=low_cost_mode)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"train_{mode}_{spec.name}.log").write_text(
            "\n".join(lines) + "\n")
        cfg.save(out / f"policy_{mode}_{spec.name}.json")
    return cfg
