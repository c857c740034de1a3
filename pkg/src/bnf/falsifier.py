"""Randomized search for instances that violate the BN initialization inequality.

For an initialization W0, a standard optimum W* and a BN optimum What*, the
claimed inequality reads

    |W0 - What*|^2 <= |W0 - W*|^2 - (|W*|^2 - <W*, W0>)^2 / |W*|^2

whenever <W0, W*> > 0. Matrix weights are compared with the Frobenius
norm and inner product.

Because the BN cost is invariant under positive rescaling of the weights,
its optima come in open rays {t d : t > 0}. They are found by gradient
descent restricted to the unit sphere.
"""

from __future__ import annotations

import enum
import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .batchnorm import BNParams
from .errors import (
    BNFError,
    GenerationFailed,
    IllConditioned,
    NoConvergence,
    PreconditionUnmet,
    ZeroOptimum,
)
from .nn_core import Dataset
from .objective import KAPPA_MAX, bn_cost, bn_cost_gradient, least_squares_fit, standard_cost_gradient

log = logging.getLogger(__name__)

INEQ_TOL = 1e-12
VIOLATION_SLACK = 1e-9
STANDARD_GRAD_TOL = 1e-9
DEDUP_ANGLE = 1e-4
CURVATURE_STEP = 1e-4
GRID_POINTS_2D = 100_000
W0_BOX = 2.0
W0_MIN_NORM = 0.1
MAX_REGENERATIONS = 100


class TargetModel(str, enum.Enum):
    QUADRATIC = "quadratic_of_inputs"
    LINEAR_NOISE = "linear_plus_noise"


@dataclass(frozen=True)
class InstanceSpec:
    p: int = 2
    N: int = 3
    input_range: tuple[float, float] = (-3.0, 3.0)
    target_model: TargetModel = TargetModel.QUADRATIC
    noise_scale: float = 0.0
    seed: int = 0

    def __post_init__(self):
        lo, hi = (float(v) for v in self.input_range)
        if not (self.N > self.p >= 1):
            raise ValueError(f"need N > p >= 1, got N={self.N}, p={self.p}")
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError(f"bad input range {self.input_range}")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        object.__setattr__(self, "input_range", (lo, hi))
        object.__setattr__(self, "target_model", TargetModel(self.target_model))

    def to_dict(self):
        d = asdict(self)
        d["input_range"] = list(self.input_range)
        d["target_model"] = self.target_model.value
        return d


@dataclass(frozen=True)
class SearchConfig:
    trials: int = 200
    restarts_per_instance: int = 4
    step_size: float = 1e-2
    max_iters: int = 10_000
    grad_tol: float = 1e-9
    master_seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.restarts_per_instance < 1:
            raise ValueError("restarts_per_instance must be >= 1")
        if not (self.grad_tol > 0 and self.step_size > 0):
            raise ValueError("grad_tol and step_size must be positive")
        if self.master_seed < 0:
            raise ValueError("master_seed must be non-negative")


def _vec(a):
    return np.asarray(a, dtype=float).tolist()


@dataclass(frozen=True)
class Violation:
    W0: np.ndarray
    W_star: np.ndarray
    What_star: np.ndarray
    lhs: float
    rhs: float
    precondition_inner: float
    dataset: Dataset | None = None
    instance: InstanceSpec | None = None

    def to_dict(self):
        return {
            "instance": None if self.instance is None else self.instance.to_dict(),
            "dataset": None if self.dataset is None else self.dataset.to_dict(),
            "W0": _vec(self.W0),
            "W_star": _vec(self.W_star),
            "What_star": _vec(self.What_star),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "precondition_inner": self.precondition_inner,
        }


@dataclass(frozen=True)
class Holds:
    lhs: float
    rhs: float


@dataclass(frozen=True)
class Skipped:
    reason: str


class InequalityCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def check_inequality(W0, W_star, What_star) -> InequalityCheck:
    W0, Ws, Wh = (np.asarray(a, dtype=float) for a in (W0, W_star, What_star))
    inner = float(np.vdot(W0, Ws))
    if not inner > 0:
        raise PreconditionUnmet(f"<W0, W*> = {inner!r} is not positive")
    norm2 = float(np.vdot(Ws, Ws))
    if norm2 == 0:
        raise ZeroOptimum("W* is zero")
    lhs = float(np.sum((W0 - Wh) ** 2))
    rhs = float(np.sum((W0 - Ws) ** 2)) - (norm2 - inner) ** 2 / norm2
    return InequalityCheck(lhs, rhs, lhs <= rhs + INEQ_TOL)


def trial_seed(master_seed: int, trial_index: int) -> int:
    """Seed of trial ``trial_index``: first 64-bit word of SeedSequence([master, index])."""
    state = np.random.SeedSequence([master_seed, trial_index]).generate_state(1, np.uint64)
    return int(state[0])


def _instance_rng(seed, stream):
    return np.random.default_rng(np.random.SeedSequence([seed, stream]))


def _bn_well_posed(X):
    U = X - X.mean(axis=0)
    cov = U.T @ U / X.shape[0]
    return np.isfinite(np.linalg.cond(cov)) and np.linalg.cond(cov) <= KAPPA_MAX


def random_instance(spec: InstanceSpec) -> tuple[Dataset, np.ndarray]:
    """Draw a dataset and an initialization, deterministically from ``spec.seed``."""
    rng = _instance_rng(spec.seed, 0)
    lo, hi = spec.input_range
    for _ in range(MAX_REGENERATIONS):
        X = rng.uniform(lo, hi, size=(spec.N, spec.p))
        if spec.target_model is TargetModel.QUADRATIC:
            y = np.sum(X * X, axis=1)
        else:
            a = rng.uniform(-W0_BOX, W0_BOX, size=spec.p)
            y = X @ a + spec.noise_scale * rng.standard_normal(spec.N)
        G = X.T @ X
        if np.linalg.cond(G) > KAPPA_MAX or not _bn_well_posed(X):
            continue
        for _ in range(MAX_REGENERATIONS):
            W0 = rng.uniform(-W0_BOX, W0_BOX, size=spec.p)
            if np.linalg.norm(W0) >= W0_MIN_NORM:
                return Dataset(X, y), W0
    raise GenerationFailed(f"no well-conditioned instance after {MAX_REGENERATIONS} draws")


def _tangent_basis(d):
    # columns 1.. of a complete QR of d span its orthogonal complement
    q, _ = np.linalg.qr(d[:, None], mode="complete")
    return q[:, 1:]


def tangential_second_differences(f, d, h=CURVATURE_STEP):
    """Centered second differences of f along great circles through d."""
    f0 = f(d)
    out = []
    for v in _tangent_basis(d).T:
        fp = f(math.cos(h) * d + math.sin(h) * v)
        fm = f(math.cos(h) * d - math.sin(h) * v)
        out.append((fp - 2.0 * f0 + fm) / h**2)
    return np.array(out)


def _angle(a, b):
    return 2.0 * math.asin(min(1.0, np.linalg.norm(a - b) / 2.0))


def sphere_descent(data, d, config: SearchConfig, params=None, tol=None):
    """Gradient descent on the unit sphere with Barzilai-Borwein steps and backtracking.

    The first trial step is ``config.step_size``. Returns the final unit vector
    and whether the tangential gradient norm fell to ``tol``.
    """
    tol = config.grad_tol if tol is None else tol
    d = np.asarray(d, dtype=float)
    d = d / np.linalg.norm(d)

    def tangential(v):
        g = bn_cost_gradient(v, data, params)
        return g - (g @ v) * v

    f = bn_cost(d, data, params)
    g = tangential(d)
    step = config.step_size
    for _ in range(config.max_iters):
        gnorm = np.linalg.norm(g)
        if gnorm <= tol:
            return d, True
        noise = 1e-13 * (1.0 + abs(f))
        while True:
            cand = d - step * g
            cand = cand / np.linalg.norm(cand)
            f_new = bn_cost(cand, data, params)
            g_new = tangential(cand)
            if step * gnorm**2 > noise:
                if f_new <= f - 1e-4 * step * gnorm**2:
                    break
            # below roundoff the cost cannot rank candidates; use the gradient
            elif np.linalg.norm(g_new) < gnorm:
                break
            step *= 0.5
            if step < 1e-16:
                return d, False
        s, y = cand - d, g_new - g
        sy = s @ y
        step = float(np.clip((s @ s) / sy, 1e-10, 1e3)) if sy > 0 else config.step_size
        d, f, g = cand, f_new, g_new
    return d, bool(np.linalg.norm(g) <= tol)


def angular_grid_minima(data, params=None, n=GRID_POINTS_2D):
    """Local minima of theta -> cost(cos theta, sin theta) on an n-point periodic grid (p = 2)."""
    theta = np.arange(n) * (2.0 * np.pi / n)
    W = np.column_stack([np.cos(theta), np.sin(theta)])
    costs = _bn_cost_rows(W, data, params)
    is_min = (costs < np.roll(costs, 1)) & (costs <= np.roll(costs, -1))
    return theta[is_min], costs[is_min], theta, costs


def _bn_cost_rows(W, data, params=None):
    """Vectorized BN cost for each row of W (one weight vector per row)."""
    params = BNParams.plain() if params is None else params
    Z = W @ data.inputs.T
    mu = Z.mean(axis=1, keepdims=True)
    C = Z - mu
    sigma = np.sqrt((C * C).mean(axis=1, keepdims=True))
    with np.errstate(divide="ignore", invalid="ignore"):
        R = params.gamma[0] * C / sigma + params.beta[0] - data.targets
    return np.sum(R * R, axis=1)


def solve_bn_optima(data: Dataset, config: SearchConfig, params=None, seed=None) -> list[np.ndarray]:
    """Unit directions of the local minima of the BN cost, found by multi-start descent."""
    rng = _instance_rng(config.master_seed if seed is None else seed, 1)
    starts = [rng.standard_normal(data.dim) for _ in range(config.restarts_per_instance)]
    grid_dirs = []
    if data.dim == 2:
        grid_theta, *_ = angular_grid_minima(data, params)
        grid_dirs = [np.array([math.cos(t), math.sin(t)]) for t in grid_theta]
        starts.extend(grid_dirs)

    f = lambda v: bn_cost(v, data, params)  # noqa: E731
    found = []
    for s in starts:
        d, ok = sphere_descent(data, s, config, params)
        if ok and not any(_angle(d, e) < DEDUP_ANGLE for e in found):
            found.append(d)
    if not found:
        raise NoConvergence(f"no restart converged within {config.max_iters} iterations")

    minima = [d for d in found if np.all(tangential_second_differences(f, d) > 0)]
    for g in grid_dirs:
        if not any(_angle(g, d) < 10 * 2 * np.pi / GRID_POINTS_2D for d in minima):
            log.warning("grid minimum at %s has no matching descent minimum", g)
    return sorted(minima, key=tuple)


def nearest_optimum(W0, directions) -> np.ndarray | None:
    """Closest attained point of the rays {t d : t > 0} to W0, or None."""
    W0 = np.asarray(W0, dtype=float)
    best = None
    for d in sorted((np.asarray(d, dtype=float) for d in directions), key=tuple):
        t = float(W0 @ d)
        if t <= 0:
            continue
        point = t * d
        dist = float(np.sum((W0 - point) ** 2))
        if best is None or dist < best[0]:
            best = (dist, point)
    return None if best is None else best[1]


def check_lemma_on_instance(
    data: Dataset,
    W0,
    config: SearchConfig,
    params=None,
    seed=None,
    instance: InstanceSpec | None = None,
):
    """Evaluate the inequality on one instance: Violation, Holds or Skipped."""
    W0 = np.asarray(W0, dtype=float)
    try:
        W_star = least_squares_fit(data)
    except IllConditioned as exc:
        return Skipped(f"ill-conditioned: {exc}")
    if np.linalg.norm(standard_cost_gradient(W_star, data)) > STANDARD_GRAD_TOL:
        return Skipped("standard optimum not resolved to tolerance")
    if not np.any(W_star):
        return Skipped("standard optimum is zero")
    inner = float(W0 @ W_star)
    if not inner > 0:
        return Skipped("precondition <W0, W*> > 0 unmet")
    try:
        directions = solve_bn_optima(data, config, params, seed)
    except NoConvergence as exc:
        return Skipped(f"no convergence: {exc}")
    except BNFError as exc:
        return Skipped(f"bn solver failed: {exc}")
    What = nearest_optimum(W0, directions)
    if What is None:
        return Skipped("no BN optimum ray reachable from W0")

    # the gradient scales like 1/t along a ray, so polish the direction for small t
    t = float(np.linalg.norm(What))
    if np.linalg.norm(bn_cost_gradient(What, data, params)) > config.grad_tol:
        d, ok = sphere_descent(data, What / t, config, params, tol=0.5 * config.grad_tol * t)
        What = float(W0 @ d) * d
        if not ok or W0 @ d <= 0 or np.linalg.norm(bn_cost_gradient(What, data, params)) > config.grad_tol:
            return Skipped("BN optimum not resolved to tolerance")

    lhs, rhs, holds = check_inequality(W0, W_star, What)
    if lhs > rhs + VIOLATION_SLACK:
        return Violation(W0, W_star, What, lhs, rhs, inner, data, instance)
    if holds:
        return Holds(lhs, rhs)
    return Skipped("inconclusive: excess within violation slack")


@dataclass
class SearchSummary:
    violated: int = 0
    held: int = 0
    skipped: int = 0
    skip_reasons: dict[str, int] = field(default_factory=dict)
    violations: list[Violation] = field(default_factory=list)

    def to_dict(self):
        return {
            "violated": self.violated,
            "held": self.held,
            "skipped": self.skipped,
            "skip_reasons": dict(sorted(self.skip_reasons.items())),
            "violations": [v.to_dict() for v in self.violations],
        }


def example1_instance():
    from .counterexample import W0_EXAMPLE, example_dataset

    return example_dataset(), np.array(W0_EXAMPLE)


def run_trial(index: int, config: SearchConfig, template: InstanceSpec, example1=False):
    seed = trial_seed(config.master_seed, index)
    if example1:
        data, W0 = example1_instance()
        return check_lemma_on_instance(data, W0, config, seed=seed)
    spec = replace(template, seed=seed)
    try:
        data, W0 = random_instance(spec)
    except GenerationFailed as exc:
        return Skipped(f"generation failed: {exc}")
    return check_lemma_on_instance(data, W0, config, seed=seed, instance=spec)


def search(
    config: SearchConfig,
    spec_template: InstanceSpec | None = None,
    threads: int = 1,
    example1: bool = False,
) -> SearchSummary:
    """Run ``config.trials`` independent trials and aggregate them in trial order."""
    template = InstanceSpec() if spec_template is None else spec_template
    indices = range(config.trials)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda i: run_trial(i, config, template, example1), indices))
    else:
        outcomes = [run_trial(i, config, template, example1) for i in indices]

    summary = SearchSummary()
    reasons = Counter()
    for outcome in outcomes:
        if isinstance(outcome, Violation):
            summary.violated += 1
            summary.violations.append(outcome)
        elif isinstance(outcome, Holds):
            summary.held += 1
        else:
            summary.skipped += 1
            reasons[outcome.reason.split(":")[0]] += 1
    summary.skip_reasons = dict(reasons)
    return summary
