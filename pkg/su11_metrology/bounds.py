"""Analytic QFI bounds under simultaneous photon loss and phase diffusion.

The variational objective is

    C_Q = (1+λ)² {Σ_i [(1−γ′_i(1−η_i))² Var(n_i) + η_i γ′_i² (1−η_i) ⟨n_i⟩]
                  + 2 [1−γ′_a(1−η_a)][1−γ′_b(1−η_b)] Cov(n_a, n_b)}
          + λ²/(8β_a²) + λ²/(8β_b²)

The braced factor is a convex quadratic in (γ′_a, γ′_b); its minimum C̃_Q is
found by an exact stationary-point solve, after which the optimum in λ is a
scalar closed form.
"""

import logging
import math
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationInfo,
    field_validator,
    model_validator,
)
from scipy.optimize import minimize

from .exceptions import DegenerateMoments, ZeroInformation
from .gaussian import PhotonMoments
from .validators import (
    Tolerances,
    validate_finite,
    validate_non_negative,
    validate_transmission,
)

logger = logging.getLogger(__name__)


class NoiseParams(BaseModel):
    """Per-arm loss transmissions and phase-diffusion coefficients."""

    model_config = ConfigDict(frozen=True)

    eta_a: float = 1.0
    eta_b: float = 1.0
    beta_a: float = 0.0
    beta_b: float = 0.0

    @field_validator("eta_a", "eta_b")
    @classmethod
    def validate_eta(cls, v: float, info: ValidationInfo) -> float:
        """Validate transmissions against (0, 1]."""
        return validate_transmission(v, str(info.field_name))

    @field_validator("beta_a", "beta_b")
    @classmethod
    def validate_beta(cls, v: float, info: ValidationInfo) -> float:
        """Validate non-negative diffusion coefficients."""
        return validate_non_negative(v, str(info.field_name))

    @property
    def loss_a(self) -> float:
        """Absorbed fraction 1 − η_a."""
        return 1.0 - self.eta_a

    @property
    def loss_b(self) -> float:
        """Absorbed fraction 1 − η_b."""
        return 1.0 - self.eta_b

    def build(self) -> Dict[str, Any]:
        """Build the noise parameters as a dictionary."""
        return {
            "eta_a": self.eta_a,
            "eta_b": self.eta_b,
            "beta_a": self.beta_a,
            "beta_b": self.beta_b,
        }

    @classmethod
    def create(
        cls,
        eta_a: float = 1.0,
        eta_b: float = 1.0,
        beta_a: float = 0.0,
        beta_b: float = 0.0,
    ) -> "NoiseParams":
        """Create per-arm noise parameters."""
        return cls(eta_a=eta_a, eta_b=eta_b, beta_a=beta_a, beta_b=beta_b)

    @classmethod
    def symmetric(cls, eta: float = 1.0, beta: float = 0.0) -> "NoiseParams":
        """Create equal-arm noise parameters."""
        return cls(eta_a=eta, eta_b=eta, beta_a=beta, beta_b=beta)

    def with_eta(self, eta: float) -> "NoiseParams":
        """Return a copy with both transmissions set to eta."""
        return NoiseParams.create(eta, eta, self.beta_a, self.beta_b)

    def with_beta(self, beta: float) -> "NoiseParams":
        """Return a copy with both diffusion coefficients set to beta."""
        return NoiseParams.create(self.eta_a, self.eta_b, beta, beta)


class VariationalParams(BaseModel):
    """Kraus gauge parameters γ′_a, γ′_b and the purification rotation λ."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    gamma_prime_a: float = 0.0
    gamma_prime_b: float = 0.0
    lam: float = Field(0.0, alias="lambda")

    @field_validator("gamma_prime_a", "gamma_prime_b", "lam")
    @classmethod
    def validate_finite_fields(cls, v: float, info: ValidationInfo) -> float:
        """Validate finite parameters."""
        return validate_finite(v, str(info.field_name))

    @classmethod
    def create(
        cls, gamma_a: float = 0.0, gamma_b: float = 0.0, lam: float = 0.0
    ) -> "VariationalParams":
        """Create variational parameters."""
        return cls(gamma_prime_a=gamma_a, gamma_prime_b=gamma_b, lam=lam)


def _or_nan(value: Optional[float]) -> float:
    return math.nan if value is None else value


class ClosedFormCheck(BaseModel):
    """Reference closed-form optimum and its agreement with the exact solve.

    ``⟨Δn_i⟩`` in the reference J, T_ij and K_ij is read as sqrt(Var(n_i)).
    """

    model_config = ConfigDict(frozen=True)

    a_a: float
    a_b: float
    b_a: float
    b_b: float
    j: float
    t_ab: float
    t_ba: float
    k_ab: float
    k_ba: float
    gamma_reference: Tuple[float, float]
    c_tilde_reference: float
    mismatches: Tuple[str, ...] = ()

    @property
    def agrees(self) -> bool:
        """True when every reference component matches the exact optimum."""
        return not self.mismatches


class BoundBreakdown(BaseModel):
    """Every quantity of the loss-plus-diffusion bound for one parameter set."""

    model_config = ConfigDict(frozen=True)

    f_q_lossless: float
    c_tilde: float
    c_phi: float
    lambda_opt: float
    gamma_opt: Tuple[float, float]
    delta_phi: float
    diffusion_floor: float
    # A_i = ⟨n_i⟩/Var(n_i) and J = Cov/(σ_a σ_b) are None when a number variance vanishes
    a_a: Optional[float] = None
    a_b: Optional[float] = None
    b_a: float = 0.0
    b_b: float = 0.0
    j: Optional[float] = None
    method: Literal["closed_form", "numeric"] = "closed_form"
    closed_form: Optional[ClosedFormCheck] = None

    @model_validator(mode="after")
    def validate_ordering(self) -> "BoundBreakdown":
        """Validate C_φ ≤ C̃_Q ≤ F_Q."""
        slack = Tolerances.ORDERING_SLACK * max(1.0, self.f_q_lossless)
        if self.c_phi > self.c_tilde + slack or self.c_tilde > self.f_q_lossless + slack:
            raise ValueError(
                f"bound ordering violated: C_phi={self.c_phi}, C_tilde={self.c_tilde}, "
                f"F_Q={self.f_q_lossless}"
            )
        return self

    def build(self) -> Dict[str, Any]:
        """Build the breakdown as a dictionary."""
        return {
            "F_Q": self.f_q_lossless,
            "C_tilde": self.c_tilde,
            "C_phi": self.c_phi,
            "delta_phi": self.delta_phi,
            "lambda_opt": self.lambda_opt,
            "gamma_opt_a": self.gamma_opt[0],
            "gamma_opt_b": self.gamma_opt[1],
            "diffusion_floor": self.diffusion_floor,
            "A_a": _or_nan(self.a_a),
            "A_b": _or_nan(self.a_b),
            "B_a": self.b_a,
            "B_b": self.b_b,
            "J": _or_nan(self.j),
            "method": self.method,
        }


def qfi_lossless(m: PhotonMoments) -> float:
    """Pure-state QFI F_Q = Var(n_a) + Var(n_b) + 2Cov(n_a, n_b) = 4Var(K_z)."""
    return max(0.0, m.var_a + m.var_b + 2 * m.cov_ab)


def braced_objective(
    m: PhotonMoments, noise: NoiseParams, gamma_a: float, gamma_b: float
) -> float:
    """Loss-only factor of C_Q, i.e. its value at λ = 0."""
    u_a, u_b = noise.loss_a, noise.loss_b
    w_a = 1 - gamma_a * u_a
    w_b = 1 - gamma_b * u_b
    return (
        w_a**2 * m.var_a
        + noise.eta_a * gamma_a**2 * u_a * m.mean_a
        + w_b**2 * m.var_b
        + noise.eta_b * gamma_b**2 * u_b * m.mean_b
        + 2 * w_a * w_b * m.cov_ab
    )


def _braced_gradient(
    m: PhotonMoments, noise: NoiseParams, gamma: np.ndarray
) -> np.ndarray:
    u_a, u_b = noise.loss_a, noise.loss_b
    w_a = 1 - gamma[0] * u_a
    w_b = 1 - gamma[1] * u_b
    return np.array(
        [
            2 * u_a * (noise.eta_a * m.mean_a * gamma[0] - m.var_a * w_a - m.cov_ab * w_b),
            2 * u_b * (noise.eta_b * m.mean_b * gamma[1] - m.var_b * w_b - m.cov_ab * w_a),
        ]
    )


def diffusion_penalty(beta: float, lam: float) -> float:
    """Environment term λ²/(8β²) of one arm; zero at λ = 0, infinite at β = 0 otherwise."""
    if beta == 0.0:
        return 0.0 if lam == 0.0 else math.inf
    return lam**2 / (8 * beta**2)


def c_q_objective(m: PhotonMoments, noise: NoiseParams, v: VariationalParams) -> float:
    """Variational upper bound C_Q(γ′_a, γ′_b, λ) on the QFI."""
    braced = braced_objective(m, noise, v.gamma_prime_a, v.gamma_prime_b)
    return (
        (1 + v.lam) ** 2 * braced
        + diffusion_penalty(noise.beta_a, v.lam)
        + diffusion_penalty(noise.beta_b, v.lam)
    )


def _stationarity_system(
    m: PhotonMoments, noise: NoiseParams
) -> Tuple[np.ndarray, np.ndarray]:
    # gradient rows divided by 2(1−η_i); lossless rows stay well defined
    u_a, u_b = noise.loss_a, noise.loss_b
    matrix = np.array(
        [
            [u_a * m.var_a + noise.eta_a * m.mean_a, m.cov_ab * u_b],
            [m.cov_ab * u_a, u_b * m.var_b + noise.eta_b * m.mean_b],
        ]
    )
    rhs = np.array([m.var_a + m.cov_ab, m.var_b + m.cov_ab])
    return matrix, rhs


def minimize_gamma(
    m: PhotonMoments, noise: NoiseParams
) -> Tuple[Tuple[float, float], float]:
    """Exact minimizer of the braced quadratic; returns (γ′_opt, C̃_Q)."""
    matrix, rhs = _stationarity_system(m, noise)
    if not np.all(np.isfinite(matrix)) or np.linalg.cond(matrix) > Tolerances.SINGULAR_CONDITION:
        raise DegenerateMoments(
            f"singular loss quadratic form for moments {m.build()} and noise {noise.build()}"
        )
    gamma = np.linalg.solve(matrix, rhs)
    gamma_a, gamma_b = float(gamma[0]), float(gamma[1])
    c_tilde = braced_objective(m, noise, gamma_a, gamma_b)
    return (gamma_a, gamma_b), max(0.0, c_tilde)


def minimize_gamma_numeric(
    m: PhotonMoments,
    noise: NoiseParams,
    start: Tuple[float, float] = (0.0, 0.0),
) -> Tuple[Tuple[float, float], float]:
    """Direct numeric minimization of the braced quadratic (BFGS)."""
    x0 = np.array(start, dtype=float)
    scale = max(1.0, braced_objective(m, noise, *start))
    result = minimize(
        lambda x: braced_objective(m, noise, float(x[0]), float(x[1])),
        x0,
        jac=lambda x: _braced_gradient(m, noise, x),
        method="BFGS",
        options={"gtol": 1e-10 * scale},
    )
    gamma_a, gamma_b = float(result.x[0]), float(result.x[1])
    logger.debug("numeric gamma minimization: %s after %d iterations", result.message, result.nit)
    return (gamma_a, gamma_b), max(0.0, float(result.fun))


def diffusion_floor(noise: NoiseParams) -> float:
    """Additive term 8β_a²β_b²/(β_a²+β_b²); zero when either arm is diffusion-free."""
    ba2, bb2 = noise.beta_a**2, noise.beta_b**2
    if ba2 == 0.0 or bb2 == 0.0:
        return 0.0
    return 8 * ba2 * bb2 / (ba2 + bb2)


def optimal_lambda(c_tilde: float, noise: NoiseParams) -> float:
    """λ_opt = −8C̃β_a²β_b² / (8C̃β_a²β_b² + β_a² + β_b²)."""
    ba2, bb2 = noise.beta_a**2, noise.beta_b**2
    if ba2 + bb2 == 0.0:
        return 0.0
    product = 8 * c_tilde * ba2 * bb2
    return -product / (product + ba2 + bb2)


def optimal_c_phi(c_tilde: float, noise: NoiseParams) -> float:
    """C_φ = C̃(β_a²+β_b²) / (8C̃β_a²β_b² + β_a² + β_b²)."""
    ba2, bb2 = noise.beta_a**2, noise.beta_b**2
    if ba2 + bb2 == 0.0:
        return c_tilde
    return c_tilde * (ba2 + bb2) / (8 * c_tilde * ba2 * bb2 + ba2 + bb2)


def loss_ceiling(m: PhotonMoments, noise: NoiseParams) -> float:
    """Σ_i η_i⟨n_i⟩/(1−η_i), an upper limit on C̃_Q set by loss alone."""
    total = 0.0
    for mean, eta in ((m.mean_a, noise.eta_a), (m.mean_b, noise.eta_b)):
        if mean == 0.0:
            continue
        if eta == 1.0:
            return math.inf
        total += eta * mean / (1 - eta)
    return total


def _sensitivity(c_tilde: float, floor: float) -> float:
    if c_tilde <= 0.0:
        raise ZeroInformation("C_tilde is zero: the state carries no phase information")
    return math.sqrt(1 / c_tilde + floor)


def delta_phi_bound(report: BoundBreakdown) -> float:
    """Phase-sensitivity bound sqrt(1/C̃_Q + 8β_a²β_b²/(β_a²+β_b²))."""
    return _sensitivity(report.c_tilde, report.diffusion_floor)


def _relative_gap(value: float, reference: float) -> float:
    return abs(value - reference) / max(abs(reference), 1e-300)


def _closed_form_terms(
    m: PhotonMoments,
    noise: NoiseParams,
    gamma_opt: Tuple[float, float],
    c_tilde: float,
) -> ClosedFormCheck:
    moments = {"a": (m.mean_a, m.var_a), "b": (m.mean_b, m.var_b)}
    eta = {"a": noise.eta_a, "b": noise.eta_b}
    a_coef = {k: mean / var for k, (mean, var) in moments.items()}
    b_coef = {k: (1 - eta[k]) / eta[k] for k in eta}
    spread = {k: math.sqrt(var) for k, (_, var) in moments.items()}
    cov = m.cov_ab
    j = cov / (spread["a"] * spread["b"])

    gamma: Dict[str, float] = {}
    t: Dict[str, float] = {}
    k_term: Dict[str, float] = {}
    for i, other in (("a", "b"), ("b", "a")):
        mean_i, var_i = moments[i]
        var_j = moments[other][1]
        weight_b = b_coef[other] / (a_coef[other] + b_coef[other])
        weight_a = a_coef[other] / (a_coef[other] + b_coef[other])
        var_prime = var_i - weight_b * cov**2 / var_j
        gamma[i] = (var_prime + weight_b * cov) / (
            (1 - eta[i]) * var_prime + eta[i] * mean_i
        )
        ratio = spread[other] / spread[i]
        denominator = a_coef[i] + b_coef[i] * (1 - weight_b * j**2)
        t[i] = (a_coef[i] - a_coef[other] * b_coef[i] / (a_coef[other] + b_coef[other]) * ratio * j) / denominator
        k_term[i] = math.sqrt(b_coef[i]) * (1 + weight_a * ratio * j - weight_b * j**2) / denominator

    c_reference = sum(t[i] ** 2 * moments[i][1] + k_term[i] ** 2 * moments[i][0] for i in ("a", "b"))
    c_reference += 2 * t["a"] ** 2 * t["b"] ** 2 * cov

    mismatches: List[str] = []
    if _relative_gap(c_reference, c_tilde) > Tolerances.CLOSED_FORM_AGREEMENT:
        mismatches.append("c_tilde")
    # γ′_i is immaterial on a lossless arm
    for index, key in enumerate(("a", "b")):
        if eta[key] < 1.0 and _relative_gap(gamma[key], gamma_opt[index]) > Tolerances.CLOSED_FORM_AGREEMENT:
            mismatches.append(f"gamma_{key}")
    if mismatches:
        logger.debug("reference closed form disagrees with exact solve on %s", mismatches)

    return ClosedFormCheck(
        a_a=a_coef["a"],
        a_b=a_coef["b"],
        b_a=b_coef["a"],
        b_b=b_coef["b"],
        j=j,
        t_ab=t["a"],
        t_ba=t["b"],
        k_ab=k_term["a"],
        k_ba=k_term["b"],
        gamma_reference=(gamma["a"], gamma["b"]),
        c_tilde_reference=c_reference,
        mismatches=tuple(mismatches),
    )


def _assemble(
    m: PhotonMoments,
    noise: NoiseParams,
    gamma: Tuple[float, float],
    c_tilde: float,
    method: Literal["closed_form", "numeric"],
    check: Optional[ClosedFormCheck],
) -> BoundBreakdown:
    a_a = m.mean_a / m.var_a if m.var_a > 0.0 else None
    a_b = m.mean_b / m.var_b if m.var_b > 0.0 else None
    j = m.cov_ab / math.sqrt(m.var_a * m.var_b) if m.var_a > 0.0 and m.var_b > 0.0 else None
    floor = diffusion_floor(noise)
    return BoundBreakdown(
        f_q_lossless=qfi_lossless(m),
        c_tilde=c_tilde,
        c_phi=optimal_c_phi(c_tilde, noise),
        lambda_opt=optimal_lambda(c_tilde, noise),
        gamma_opt=gamma,
        delta_phi=_sensitivity(c_tilde, floor),
        diffusion_floor=floor,
        a_a=a_a,
        a_b=a_b,
        b_a=(1 - noise.eta_a) / noise.eta_a,
        b_b=(1 - noise.eta_b) / noise.eta_b,
        j=j,
        method=method,
        closed_form=check,
    )


def gamma_lambda_closed_form(m: PhotonMoments, noise: NoiseParams) -> BoundBreakdown:
    """Optimal (γ′, λ), C̃_Q, C_φ and Δφ, with the reference closed form as cross-check."""
    if m.var_a <= 0.0 or m.var_b <= 0.0:
        raise DegenerateMoments("closed form requires var_a > 0 and var_b > 0")
    gamma, c_tilde = minimize_gamma(m, noise)
    check = _closed_form_terms(m, noise, gamma, c_tilde)
    return _assemble(m, noise, gamma, c_tilde, "closed_form", check)


def bound_breakdown(m: PhotonMoments, noise: NoiseParams) -> BoundBreakdown:
    """Full bound, falling back to numeric minimization for degenerate moments."""
    try:
        return gamma_lambda_closed_form(m, noise)
    except DegenerateMoments as e:
        logger.debug("falling back to numeric minimization: %s", e)
    gamma, c_tilde = minimize_gamma_numeric(m, noise)
    return _assemble(m, noise, gamma, c_tilde, "numeric", None)
