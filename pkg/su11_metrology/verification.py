"""Dual-route self-checks: analytic bounds against the truncated Fock space."""

import itertools
import logging
import math
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from .bounds import (
    NoiseParams,
    VariationalParams,
    bound_breakdown,
    c_q_objective,
    qfi_lossless,
)
from .fock import (
    build_state,
    exact_moments,
    fidelity_qfi,
    kraus_cq_check,
    mixed_qfi,
    noisy_state,
    pure_qfi,
)
from .gaussian import InputSpec, PhotonMoments, PumpSpec, propagate

logger = logging.getLogger(__name__)

MOMENT_FIELDS = ("mean_a", "mean_b", "var_a", "var_b", "cov_ab")
DIFFUSION_BETAS = (0.0, 0.003, 0.01, 0.1)
DENSITY_CUTOFF = 40
SANDWICH_NOISE = tuple(itertools.product((0.9, 0.8), (0.05, 0.02)))


class CheckResult(BaseModel):
    """One verified relation with its remaining tolerance."""

    model_config = ConfigDict(frozen=True)

    check: str
    point: str
    value: float
    reference: float
    margin: float
    passed: bool

    def build(self) -> Dict[str, Any]:
        """Build the result as a report row."""
        return {
            "check": self.check,
            "point": self.point,
            "value": self.value,
            "reference": self.reference,
            "margin": self.margin,
            "passed": self.passed,
        }


def _label(**params: float) -> str:
    return " ".join(f"{key}={value:g}" for key, value in params.items())


def agreement(
    check: str,
    point: str,
    value: float,
    reference: float,
    rtol: float,
    atol: float = 0.0,
) -> CheckResult:
    """Equality within ``rtol`` relative to the reference, floored at ``atol`` absolute."""
    error = abs(value - reference)
    margin = max(rtol * abs(reference), atol) - error
    return CheckResult(
        check=check,
        point=point,
        value=value,
        reference=reference,
        margin=margin,
        passed=margin >= 0.0,
    )


def at_most(check: str, point: str, value: float, limit: float, rtol: float) -> CheckResult:
    """Inequality ``value ≤ limit`` with relative slack."""
    margin = limit + rtol * abs(limit) - value
    return CheckResult(
        check=check,
        point=point,
        value=value,
        reference=limit,
        margin=margin,
        passed=margin >= 0.0,
    )


def moment_grid() -> List[Dict[str, float]]:
    """The 3×3×3 grid over |α|², r and g used for the moment oracle."""
    return [
        {"alpha2": alpha2, "r": r, "g": g}
        for alpha2, r, g in itertools.product((0.0, 1.0, 2.0), (0.0, 0.5, 1.0), (0.0, 0.6, 1.2))
    ]


def check_noiseless() -> List[CheckResult]:
    """TMSV at g = 2 without noise gives Δφ = 1/sinh(4)."""
    m = propagate(InputSpec(), PumpSpec.create(2.0))
    report = bound_breakdown(m, NoiseParams())
    return [
        agreement(
            "noiseless_recovery", _label(g=2.0), report.delta_phi, 1 / math.sinh(4.0), 1e-12
        )
    ]


def check_reductions(points: Sequence[PhotonMoments]) -> List[CheckResult]:
    """β = 0 gives λ_opt = 0 and Δφ = sqrt(1/C̃); η = 1 gives Δφ = sqrt(1/F + 4β²)."""
    results = []
    for index, m in enumerate(points):
        for eta in (0.5, 0.75, 0.9, 1.0):
            report = bound_breakdown(m, NoiseParams.symmetric(eta, 0.0))
            label = _label(point=index, eta=eta)
            results.append(agreement("loss_only_lambda", label, report.lambda_opt, 0.0, 0.0))
            results.append(
                agreement(
                    "loss_only_delta_phi",
                    label,
                    report.delta_phi,
                    math.sqrt(1 / report.c_tilde),
                    1e-12,
                )
            )
        for beta in DIFFUSION_BETAS:
            report = bound_breakdown(m, NoiseParams.symmetric(1.0, beta))
            expected = math.sqrt(1 / qfi_lossless(m) + 4 * beta**2)
            results.append(
                agreement(
                    "diffusion_only_delta_phi",
                    _label(point=index, beta=beta),
                    report.delta_phi,
                    expected,
                    1e-12,
                )
            )
    return results


def check_moment_oracle() -> List[CheckResult]:
    """Gaussian moments against direct summation in the Fock space."""
    results = []
    for params in moment_grid():
        spec = InputSpec.create(alpha=math.sqrt(params["alpha2"]), r=params["r"])
        pump = PumpSpec.create(params["g"])
        analytic = propagate(spec, pump)
        exact = exact_moments(build_state(spec, pump))
        label = _label(**params)
        for name in MOMENT_FIELDS:
            results.append(
                agreement(
                    f"moment_{name}",
                    label,
                    getattr(analytic, name),
                    getattr(exact, name),
                    1e-6,
                    1e-9,
                )
            )
    return results


def check_pure_qfi() -> List[CheckResult]:
    """Pure-state QFI by three routes for the g = 2 TMSV."""
    spec, pump = InputSpec(), PumpSpec.create(2.0)
    state = build_state(spec, pump)
    analytic = qfi_lossless(propagate(spec, pump))
    label = _label(g=2.0, n_max=state.n_max)
    return [
        agreement("pure_qfi_number_basis", label, pure_qfi(state), analytic, 1e-6),
        agreement("pure_qfi_fidelity", label, fidelity_qfi(state), analytic, 1e-4),
        agreement("pure_qfi_closed_form", label, analytic, math.sinh(4.0) ** 2, 1e-12),
    ]


def mixed_state_points() -> List[Dict[str, float]]:
    """Inputs small enough for the density-matrix checks at ``DENSITY_CUTOFF``."""
    return [
        {"g": 0.3, "alpha": 1.0, "r": 0.5},
        {"g": 0.5, "alpha": 0.5, "r": 0.3},
        {"g": 0.5, "alpha": 1.0, "r": 0.5},
        {"g": 0.8, "alpha": 1.0, "r": 0.0},
        {"g": 1.0, "alpha": 0.0, "r": 0.0},
    ]


def check_kraus_route(
    rng: np.random.Generator, n_max: int = DENSITY_CUTOFF, draws: int = 4
) -> List[CheckResult]:
    """Explicit Kraus sums against c_q_objective on the same number distribution."""
    results = []
    for params in mixed_state_points():
        spec = InputSpec.create(alpha=params["alpha"], r=params["r"])
        state = build_state(spec, PumpSpec.create(params["g"]), n_max=n_max)
        m = exact_moments(state)
        for _ in range(draws):
            noise = NoiseParams.symmetric(rng.uniform(0.5, 1.0), rng.uniform(0.01, 0.1))
            v = VariationalParams.create(*rng.uniform(-1.0, 3.0, size=2), rng.uniform(-0.5, 0.0))
            results.append(
                agreement(
                    "kraus_dual_route",
                    _label(**params, eta=noise.eta_a, beta=noise.beta_a),
                    kraus_cq_check(state, noise, v),
                    c_q_objective(m, noise, v),
                    1e-8,
                )
            )
    return results


def check_sandwich(n_max: int = DENSITY_CUTOFF) -> List[CheckResult]:
    """mixed QFI ≤ C_φ ≤ C̃_Q ≤ F_Q on small density matrices."""
    results = []
    for params in mixed_state_points():
        spec = InputSpec.create(alpha=params["alpha"], r=params["r"])
        pump = PumpSpec.create(params["g"])
        state = build_state(spec, pump, n_max=n_max)
        m = propagate(spec, pump)
        for eta, beta in SANDWICH_NOISE:
            noise = NoiseParams.symmetric(eta, beta)
            report = bound_breakdown(m, noise)
            exact = mixed_qfi(noisy_state(state, noise))
            label = _label(**params, eta=eta, beta=beta)
            results.append(at_most("sandwich_mixed_le_c_phi", label, exact, report.c_phi, 1e-6))
            results.append(at_most("sandwich_c_phi_le_c_tilde", label, report.c_phi, report.c_tilde, 1e-6))
            results.append(
                at_most("sandwich_c_tilde_le_f_q", label, report.c_tilde, report.f_q_lossless, 1e-6)
            )
    return results


def run_oracle_suite(
    seed: int = 0, n_max: Optional[int] = None, include_density: bool = True
) -> List[CheckResult]:
    """Run every check and log the failures.

    ``n_max`` sets the cutoff of the density-matrix and Kraus checks.
    """
    cutoff = DENSITY_CUTOFF if n_max is None else n_max
    rng = np.random.default_rng(seed)
    reduction_points = [
        propagate(InputSpec.create(alpha=alpha, r=r), PumpSpec.create(g))
        for alpha, r, g in ((0.0, 0.0, 2.0), (1.0, 0.5, 1.0), (1.5, 1.0, 2.0), (0.5, 0.2, 0.5), (2.0, 0.0, 1.5))
    ]
    stages: List[Callable[[], List[CheckResult]]] = [
        check_noiseless,
        lambda: check_reductions(reduction_points),
        check_moment_oracle,
        check_pure_qfi,
        lambda: check_kraus_route(rng, cutoff),
    ]
    if include_density:
        stages.append(lambda: check_sandwich(cutoff))

    results: List[CheckResult] = []
    for stage in stages:
        results.extend(stage())
    for result in results:
        if not result.passed:
            logger.warning(
                "check %s failed at %s: value %r, reference %r, margin %.3e",
                result.check,
                result.point,
                result.value,
                result.reference,
                result.margin,
            )
    return results
