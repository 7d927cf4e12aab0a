"""Gaussian engine: input preparation, the first nonlinear beam splitter and photon moments.

Quadratures follow ``x = (a + a†)/√2``, ``p = (a − a†)/(i√2)`` with vacuum
covariance ``½·I`` and phase-space ordering ``(x_a, p_a, x_b, p_b)``.
A squeezing phase of zero squeezes ``x``.
"""

import math
from typing import Any, Dict, Tuple

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    ValidationInfo,
    field_validator,
    model_validator,
)

from .validators import (
    Tolerances,
    normalize_phase,
    validate_finite,
    validate_non_negative,
    validate_symmetric,
)

SYMPLECTIC_FORM = np.array(
    [
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0, 0.0],
    ]
)


class InputSpec(BaseModel):
    """Coherent state in mode a combined with squeezed vacuum in mode b."""

    model_config = ConfigDict(frozen=True)

    alpha_mag: float = 0.0
    alpha_phase: float = 0.0
    squeeze_r: float = 0.0
    squeeze_phase: float = 0.0

    @field_validator("alpha_mag", "squeeze_r")
    @classmethod
    def validate_magnitudes(cls, v: float, info: ValidationInfo) -> float:
        """Validate non-negative amplitudes."""
        return validate_non_negative(v, str(info.field_name))

    @field_validator("alpha_phase", "squeeze_phase")
    @classmethod
    def validate_phases(cls, v: float, info: ValidationInfo) -> float:
        """Normalize phases into [0, 2π)."""
        return normalize_phase(v, str(info.field_name))

    @property
    def alpha(self) -> complex:
        """Complex coherent amplitude."""
        return complex(
            self.alpha_mag * math.cos(self.alpha_phase),
            self.alpha_mag * math.sin(self.alpha_phase),
        )

    @property
    def mean_photons(self) -> float:
        """Input photon number |α|² + sinh²r."""
        return self.alpha_mag**2 + math.sinh(self.squeeze_r) ** 2

    def build(self) -> Dict[str, Any]:
        """Build the input parameters as a dictionary."""
        return {
            "alpha": self.alpha_mag,
            "alpha_phase": self.alpha_phase,
            "r": self.squeeze_r,
            "squeeze_phase": self.squeeze_phase,
        }

    @classmethod
    def create(
        cls,
        alpha: float = 0.0,
        r: float = 0.0,
        alpha_phase: float = 0.0,
        squeeze_phase: float = 0.0,
    ) -> "InputSpec":
        """Create an input specification."""
        return cls(
            alpha_mag=alpha,
            alpha_phase=alpha_phase,
            squeeze_r=r,
            squeeze_phase=squeeze_phase,
        )

    @classmethod
    def alpha_locked(
        cls, r: float, alpha_phase: float = 0.0, squeeze_phase: float = 0.0
    ) -> "InputSpec":
        """Create the input with |α|² = e^{2r}/4 used by the figure sweeps."""
        return cls.create(
            alpha=math.exp(r) / 2,
            r=r,
            alpha_phase=alpha_phase,
            squeeze_phase=squeeze_phase,
        )

    def with_phases(self, alpha_phase: float, squeeze_phase: float) -> "InputSpec":
        """Return a copy with new phases."""
        return InputSpec.create(
            alpha=self.alpha_mag,
            r=self.squeeze_r,
            alpha_phase=alpha_phase,
            squeeze_phase=squeeze_phase,
        )


class PumpSpec(BaseModel):
    """Two-mode squeezing strength and phase of the nonlinear beam splitter."""

    model_config = ConfigDict(frozen=True)

    gain_g: float = 0.0
    pump_phase: float = 0.0

    @field_validator("gain_g")
    @classmethod
    def validate_gain(cls, v: float) -> float:
        """Validate a non-negative gain."""
        return validate_non_negative(v, "gain_g")

    @field_validator("pump_phase")
    @classmethod
    def validate_pump_phase(cls, v: float) -> float:
        """Normalize the pump phase into [0, 2π)."""
        return normalize_phase(v, "pump_phase")

    @classmethod
    def create(cls, g: float, pump_phase: float = 0.0) -> "PumpSpec":
        """Create a pump specification."""
        return cls(gain_g=g, pump_phase=pump_phase)


class GaussianState(BaseModel):
    """Two-mode Gaussian state as mean quadrature vector and covariance matrix."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mean: np.ndarray
    cov: np.ndarray

    @field_validator("mean", mode="before")
    @classmethod
    def validate_mean(cls, v: Any) -> np.ndarray:
        """Validate a length-4 real mean vector."""
        arr = np.array(v, dtype=float)
        if arr.shape != (4,):
            raise ValueError(f"mean must have shape (4,), got {arr.shape}")
        arr.setflags(write=False)
        return arr

    @field_validator("cov", mode="before")
    @classmethod
    def validate_cov(cls, v: Any) -> np.ndarray:
        """Validate a symmetric 4×4 covariance matrix."""
        arr = np.array(v, dtype=float)
        if arr.shape != (4, 4):
            raise ValueError(f"cov must have shape (4, 4), got {arr.shape}")
        validate_symmetric(arr)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def validate_physical(self) -> "GaussianState":
        """Validate the uncertainty principle through the symplectic spectrum."""
        nu = symplectic_eigenvalues(self.cov)
        if float(np.min(nu)) < 0.5 - Tolerances.SYMPLECTIC_FLOOR:
            raise ValueError(
                f"covariance is unphysical: smallest symplectic eigenvalue {np.min(nu):.12g} < 1/2"
            )
        return self

    def mode(self, index: int) -> Tuple[np.ndarray, np.ndarray]:
        """Return the (mean, covariance) block of mode 0 (a) or 1 (b)."""
        sl = slice(2 * index, 2 * index + 2)
        return self.mean[sl], self.cov[sl, sl]

    @property
    def cross_covariance(self) -> np.ndarray:
        """The x_a/p_a against x_b/p_b covariance block."""
        return self.cov[0:2, 2:4]

    def is_pure(self) -> bool:
        """Return True when every symplectic eigenvalue equals ½."""
        nu = symplectic_eigenvalues(self.cov)
        return bool(np.all(np.abs(nu - 0.5) <= Tolerances.SYMPLECTIC_FLOOR))

    @classmethod
    def vacuum(cls) -> "GaussianState":
        """Create the two-mode vacuum."""
        return cls(mean=np.zeros(4), cov=0.5 * np.eye(4))


class PhotonMoments(BaseModel):
    """Means, variances and covariance of the two photon-number operators."""

    model_config = ConfigDict(frozen=True)

    mean_a: float
    mean_b: float
    var_a: float
    var_b: float
    cov_ab: float

    @field_validator("mean_a", "mean_b", "var_a", "var_b")
    @classmethod
    def validate_non_negative_fields(cls, v: float, info: ValidationInfo) -> float:
        """Validate non-negative means and variances."""
        return validate_non_negative(v, str(info.field_name))

    @field_validator("cov_ab")
    @classmethod
    def validate_covariance(cls, v: float) -> float:
        """Validate a finite covariance."""
        return validate_finite(v, "cov_ab")

    @model_validator(mode="after")
    def validate_cauchy_schwarz(self) -> "PhotonMoments":
        """Validate |Cov| ≤ sqrt(var_a·var_b)."""
        limit = math.sqrt(self.var_a * self.var_b)
        if abs(self.cov_ab) > limit + Tolerances.CAUCHY_SCHWARZ * max(1.0, limit):
            raise ValueError(
                f"cov_ab={self.cov_ab} violates Cauchy-Schwarz bound {limit}"
            )
        return self

    @property
    def n_total(self) -> float:
        """Total mean photon number."""
        return self.mean_a + self.mean_b

    @property
    def kz_variance(self) -> float:
        """Variance of K_z = (n_a + n_b + 1)/2."""
        return (self.var_a + self.var_b + 2 * self.cov_ab) / 4

    def build(self) -> Dict[str, Any]:
        """Build the moments as a dictionary."""
        return {
            "mean_a": self.mean_a,
            "mean_b": self.mean_b,
            "var_a": self.var_a,
            "var_b": self.var_b,
            "cov_ab": self.cov_ab,
        }

    @classmethod
    def create(
        cls,
        mean_a: float,
        mean_b: float,
        var_a: float,
        var_b: float,
        cov_ab: float = 0.0,
    ) -> "PhotonMoments":
        """Create photon moments, clearing negative round-off on non-negative fields."""
        return cls(
            mean_a=_clip_roundoff(mean_a),
            mean_b=_clip_roundoff(mean_b),
            var_a=_clip_roundoff(var_a),
            var_b=_clip_roundoff(var_b),
            cov_ab=cov_ab,
        )


def _clip_roundoff(value: float) -> float:
    if -Tolerances.NEGATIVE_ROUNDOFF * max(1.0, abs(value)) <= value < 0:
        return 0.0
    return float(value)


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Return the two symplectic eigenvalues of a 4×4 covariance matrix, ascending."""
    spectrum = np.sort(np.abs(np.linalg.eigvals(1j * SYMPLECTIC_FORM @ cov)))
    # eigenvalues come in ± pairs
    return spectrum[::2]


def squeezed_covariance(r: float, theta: float) -> np.ndarray:
    """Single-mode squeezed-vacuum covariance for squeezing parameter r·e^{iθ}."""
    ch, sh = math.cosh(2 * r), math.sinh(2 * r)
    return 0.5 * np.array(
        [
            [ch - sh * math.cos(theta), -sh * math.sin(theta)],
            [-sh * math.sin(theta), ch + sh * math.cos(theta)],
        ]
    )


def prepare_input(spec: InputSpec) -> GaussianState:
    """Prepare |α⟩ ⊗ |0, ς⟩ with no cross-correlations."""
    alpha = spec.alpha
    mean = math.sqrt(2) * np.array([alpha.real, alpha.imag, 0.0, 0.0])
    cov = 0.5 * np.eye(4)
    cov[2:4, 2:4] = squeezed_covariance(spec.squeeze_r, spec.squeeze_phase)
    return GaussianState(mean=mean, cov=cov)


def nbs_symplectic(pump: PumpSpec) -> np.ndarray:
    """Symplectic matrix of â → cosh(g)â + e^{iθ}sinh(g)b̂† (and a ↔ b)."""
    c, s = math.cosh(pump.gain_g), math.sinh(pump.gain_g)
    theta = pump.pump_phase
    mix = np.array(
        [[math.cos(theta), math.sin(theta)], [math.sin(theta), -math.cos(theta)]]
    )
    identity = np.eye(2)
    return np.block([[c * identity, s * mix], [s * mix, c * identity]])


def apply_nbs(state: GaussianState, pump: PumpSpec) -> GaussianState:
    """Propagate a state through the first nonlinear beam splitter."""
    if pump.gain_g == 0.0:
        return state
    symplectic = nbs_symplectic(pump)
    cov = symplectic @ state.cov @ symplectic.T
    return GaussianState(mean=symplectic @ state.mean, cov=0.5 * (cov + cov.T))


def apply_loss(state: GaussianState, eta_a: float, eta_b: float) -> GaussianState:
    """Apply beam-splitter loss with transmissions (η_a, η_b) to each arm."""
    scale = np.sqrt(np.array([eta_a, eta_a, eta_b, eta_b]))
    added = 0.5 * np.diag([1 - eta_a, 1 - eta_a, 1 - eta_b, 1 - eta_b])
    cov = scale[:, None] * state.cov * scale[None, :] + added
    return GaussianState(mean=scale * state.mean, cov=cov)


def _mode_number_moments(mean: np.ndarray, cov: np.ndarray) -> Tuple[float, float]:
    n = (np.trace(cov) + mean @ mean - 1) / 2
    var = 0.5 * np.trace(cov @ cov) - 0.25 + mean @ cov @ mean
    return float(n), float(var)


def photon_moments(state: GaussianState) -> PhotonMoments:
    """Photon-number means, variances and covariance from the Wick expansion."""
    mean_a, cov_a = state.mode(0)
    mean_b, cov_b = state.mode(1)
    n_a, var_a = _mode_number_moments(mean_a, cov_a)
    n_b, var_b = _mode_number_moments(mean_b, cov_b)
    cross = state.cross_covariance
    cov_ab = 0.5 * float(np.sum(cross * cross)) + float(mean_a @ cross @ mean_b)
    return PhotonMoments.create(
        mean_a=n_a, mean_b=n_b, var_a=var_a, var_b=var_b, cov_ab=cov_ab
    )


def propagate(spec: InputSpec, pump: PumpSpec) -> PhotonMoments:
    """Photon moments of the state after the first nonlinear beam splitter."""
    return photon_moments(apply_nbs(prepare_input(spec), pump))
