"""Machine check of the three-sample counterexample.

A single identity neuron without bias is fitted to (1,1)->2, (1,2)->5,
(2,3)->13. The least-squares weights (1,3) are used as initialization.
With gamma = 1 and beta = 0 the BN cost has a nonzero gradient there,
while the claimed inequality would force the BN optimum to coincide with
the initialization.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

from .batchnorm import BNParams
from .errors import BNFError, VerificationFailed
from .falsifier import check_inequality, nearest_optimum, tangential_second_differences
from .nn_core import Dataset
from .objective import bn_cost, bn_cost_gradient, least_squares_fit, standard_cost_gradient

W0_EXAMPLE = (1.0, 3.0)
EXPECTED_OPTIMUM = (1.0, 3.0)
RAY_DIRECTION = (5.0, 3.0)

OPTIMUM_TOL = 1e-9
TOL_CRIT = 1e-3  # "gradient does not vanish"
TOL_VANISH = 1e-8  # "gradient vanishes"
TOL_RHS = 1e-12
SECOND_DIFF_STEP = 1e-4

PLAIN = BNParams.plain()


class Verdict(str, enum.Enum):
    VIOLATED = "lemma_violated"
    NOT_VIOLATED = "lemma_not_violated"


def example_dataset() -> Dataset:
    return Dataset([[1.0, 1.0], [1.0, 2.0], [2.0, 3.0]], [2.0, 5.0, 13.0])


def is_critical(w, data: Dataset, tol=TOL_VANISH, params=PLAIN) -> bool:
    return bool(np.linalg.norm(bn_cost_gradient(w, data, params)) <= tol)


def verify_standard_optimum(data: Dataset, expected=EXPECTED_OPTIMUM):
    w = least_squares_fit(data)
    gnorm = float(np.linalg.norm(standard_cost_gradient(w, data)))
    if expected is not None and np.max(np.abs(w - np.asarray(expected))) > OPTIMUM_TOL:
        raise VerificationFailed("standard_optimum", f"fit {w.tolist()} differs from {list(expected)}")
    if gnorm > OPTIMUM_TOL:
        raise VerificationFailed("standard_optimum", f"gradient norm {gnorm:.3g} at the fit")
    return w, gnorm


def verify_bn_noncritical(data: Dataset, W0) -> np.ndarray:
    g = bn_cost_gradient(W0, data, PLAIN)
    if not np.linalg.norm(g) > TOL_CRIT:
        raise VerificationFailed("bn_noncritical", f"BN gradient {g.tolist()} vanishes at W0")
    return g


def verify_ray_minima(data: Dataset, direction=RAY_DIRECTION):
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    gnorm = float(np.linalg.norm(bn_cost_gradient(d, data, PLAIN)))
    curv = float(tangential_second_differences(lambda v: bn_cost(v, data, PLAIN), d, SECOND_DIFF_STEP).min())
    if gnorm > TOL_VANISH:
        raise VerificationFailed("ray_minima", f"BN gradient norm {gnorm:.3g} on the ray")
    if not curv > 0:
        raise VerificationFailed("ray_minima", f"tangential second difference {curv:.3g} is not positive")
    return d, gnorm, curv


def angular_grid_argmin(data: Dataset, n=1_000_000) -> float:
    """Angle in (-pi, pi] minimizing the BN cost over an n-point grid of the unit circle."""
    theta = np.arange(n) * (2.0 * np.pi / n) - np.pi
    W = np.column_stack([np.cos(theta), np.sin(theta)])
    Z = W @ data.inputs.T
    C = Z - Z.mean(axis=1, keepdims=True)
    sigma = np.sqrt((C * C).mean(axis=1, keepdims=True))
    costs = np.sum((C / sigma - data.targets) ** 2, axis=1)
    return float(theta[np.argmin(costs)])


@dataclass
class CounterexampleReport:
    standard_optimum: list | None = None
    standard_grad_norm_at_optimum: float | None = None
    bn_gradient_at_W0: list | None = None
    bn_grad_norm_at_W0: float | None = None
    critical_direction: list | None = None
    bn_grad_norm_at_critical: float | None = None
    tangential_second_difference: float | None = None
    nearest_bn_optimum: list | None = None
    inequality_lhs: float | None = None
    inequality_rhs: float | None = None
    implied_conclusion: str = "forces_Whats_equals_W0"
    verdict: Verdict = Verdict.NOT_VIOLATED
    failed_stage: str | None = None
    failure: str | None = None

    def to_dict(self):
        d = asdict(self)
        d["verdict"] = Verdict(self.verdict).value
        return d

    @classmethod
    def from_dict(cls, d):
        d = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        d["verdict"] = Verdict(d["verdict"])
        return cls(**d)

    def display(self, digits=4):
        """Copy of the report with every float rounded for human reading."""

        def rnd(v):
            if isinstance(v, float):
                return round(v, digits)
            if isinstance(v, list):
                return [rnd(x) for x in v]
            return v

        return {k: rnd(v) for k, v in self.to_dict().items()}


def run_full_verification(data: Dataset | None = None, W0=W0_EXAMPLE) -> CounterexampleReport:
    data = example_dataset() if data is None else data
    W0 = np.asarray(W0, dtype=float)
    report = CounterexampleReport()
    stage = "standard_optimum"
    try:
        W_star, gnorm = verify_standard_optimum(data)
        report.standard_optimum = W_star.tolist()
        report.standard_grad_norm_at_optimum = gnorm

        stage = "bn_noncritical"
        g = verify_bn_noncritical(data, W0)
        report.bn_gradient_at_W0 = g.tolist()
        report.bn_grad_norm_at_W0 = float(np.linalg.norm(g))

        stage = "ray_minima"
        d, dnorm, curv = verify_ray_minima(data)
        report.critical_direction = d.tolist()
        report.bn_grad_norm_at_critical = dnorm
        report.tangential_second_difference = curv

        stage = "inequality"
        What = nearest_optimum(W0, [d])
        if What is None:
            raise VerificationFailed(stage, "W0 cannot reach the BN optimum ray")
        lhs, rhs, holds = check_inequality(W0, W_star, What)
        report.nearest_bn_optimum = What.tolist()
        report.inequality_lhs = lhs
        report.inequality_rhs = rhs
        if rhs > TOL_RHS or holds:
            raise VerificationFailed(stage, f"lhs={lhs!r}, rhs={rhs!r} do not contradict")
    except BNFError as exc:
        report.failed_stage = getattr(exc, "stage", stage)
        report.failure = str(exc)
        return report

    if report.inequality_rhs <= TOL_RHS and report.bn_grad_norm_at_W0 > TOL_CRIT:
        report.verdict = Verdict.VIOLATED
    return report
