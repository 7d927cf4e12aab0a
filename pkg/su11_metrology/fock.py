"""Truncated two-mode Fock space: exact states, noise channels and QFI.

Amplitudes are indexed ``(n_a, n_b)`` with ``0 ≤ n_i ≤ n_max``. Density
matrices use the flat index ``n_a·(n_max+1) + n_b``. Nothing is renormalized
after truncation; the lost probability is carried as ``leakage``.
"""

import logging
import math
from typing import Any, Optional, Tuple, Union, overload

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.stats import binom

from .bounds import NoiseParams, VariationalParams, diffusion_penalty
from .exceptions import IllConditioned, TruncationOverflow
from .gaussian import InputSpec, PhotonMoments, PumpSpec, propagate
from .validators import Defaults, Tolerances, validate_cutoff

logger = logging.getLogger(__name__)

# ⟨p_E²⟩ of the vacuum environment mode that purifies phase diffusion
VACUUM_QUADRATURE_VARIANCE = 0.5


class FockVector(BaseModel):
    """Pure two-mode state on the truncated number basis."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n_max: int
    amps: np.ndarray
    leakage: float = 0.0

    @field_validator("n_max")
    @classmethod
    def validate_n_max(cls, v: int) -> int:
        """Validate the cutoff."""
        validate_cutoff(v)
        return v

    @field_validator("amps", mode="before")
    @classmethod
    def validate_amps(cls, v: Any) -> np.ndarray:
        """Copy amplitudes into a read-only complex array."""
        arr = np.array(v, dtype=complex)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def validate_shape_and_norm(self) -> "FockVector":
        """Validate the (n_max+1)² shape and a norm no larger than one."""
        d = self.n_max + 1
        if self.amps.shape != (d, d):
            raise ValueError(f"amps must have shape ({d}, {d}), got {self.amps.shape}")
        if self.norm_squared > 1 + 1e-10:
            raise ValueError(f"state norm² {self.norm_squared} exceeds 1")
        return self

    @property
    def dim(self) -> int:
        """Per-mode dimension n_max + 1."""
        return self.n_max + 1

    @property
    def norm_squared(self) -> float:
        """Retained probability inside the cutoff."""
        return float(np.sum(np.abs(self.amps) ** 2))

    @property
    def probabilities(self) -> np.ndarray:
        """Joint number distribution P(n_a, n_b), unnormalized."""
        return np.abs(self.amps) ** 2

    def to_density_matrix(self) -> "FockDensityMatrix":
        """Return |ψ⟩⟨ψ| on the same cutoff."""
        flat = self.amps.reshape(-1)
        return FockDensityMatrix(
            n_max=self.n_max, rho=np.outer(flat, flat.conj()), leakage=self.leakage
        )

    @classmethod
    def basis(cls, n_max: int, n_a: int, n_b: int) -> "FockVector":
        """Create the number state |n_a, n_b⟩."""
        if not (0 <= n_a <= n_max and 0 <= n_b <= n_max):
            raise ValueError(f"|{n_a},{n_b}⟩ outside accepted range [0, {n_max}]")
        amps = np.zeros((n_max + 1, n_max + 1), dtype=complex)
        amps[n_a, n_b] = 1.0
        return cls(n_max=n_max, amps=amps)


class FockDensityMatrix(BaseModel):
    """Two-mode density operator on the truncated number basis."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n_max: int
    rho: np.ndarray
    leakage: float = 0.0

    @field_validator("rho", mode="before")
    @classmethod
    def validate_rho(cls, v: Any) -> np.ndarray:
        """Copy the matrix into a read-only complex array."""
        arr = np.array(v, dtype=complex)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def validate_hermitian(self) -> "FockDensityMatrix":
        """Validate the shape and Hermiticity."""
        d = (self.n_max + 1) ** 2
        if self.rho.shape != (d, d):
            raise ValueError(f"rho must have shape ({d}, {d}), got {self.rho.shape}")
        deviation = float(np.max(np.abs(self.rho - self.rho.conj().T)))
        if deviation > Tolerances.HERMITICITY * max(1.0, float(np.max(np.abs(self.rho)))):
            raise ValueError(f"rho is not Hermitian (max deviation {deviation:.3e})")
        return self

    @property
    def dim(self) -> int:
        """Per-mode dimension n_max + 1."""
        return self.n_max + 1

    @property
    def trace(self) -> float:
        """Real part of the trace."""
        return float(np.real(np.trace(self.rho)))

    @property
    def trace_deficit(self) -> float:
        """Probability missing from the trace."""
        return max(0.0, 1.0 - self.trace)

    @property
    def probabilities(self) -> np.ndarray:
        """Joint number distribution P(n_a, n_b), unnormalized."""
        d = self.dim
        return np.real(np.diag(self.rho)).reshape(d, d)

    def tensor(self) -> np.ndarray:
        """Writable four-index view ``[n_a, n_b, m_a, m_b]`` of ρ."""
        d = self.dim
        return np.array(self.rho).reshape(d, d, d, d)

    def with_tensor(self, tensor: np.ndarray) -> "FockDensityMatrix":
        """Return a copy holding a new four-index tensor."""
        d2 = self.dim**2
        return FockDensityMatrix(
            n_max=self.n_max, rho=tensor.reshape(d2, d2), leakage=self.leakage
        )


FockState = Union[FockVector, FockDensityMatrix]


def _coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    amps = np.zeros(dim, dtype=complex)
    amps[0] = math.exp(-abs(alpha) ** 2 / 2)
    for n in range(1, dim):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    return amps


def _squeezed_amplitudes(r: float, theta: float, dim: int) -> np.ndarray:
    amps = np.zeros(dim, dtype=complex)
    amps[0] = 1 / math.sqrt(math.cosh(r))
    ratio = -np.exp(1j * theta) * math.tanh(r)
    for n in range(2, dim, 2):
        amps[n] = amps[n - 2] * ratio * math.sqrt((n - 1) / n)
    return amps


def _lower_pair(amps: np.ndarray) -> np.ndarray:
    # â b̂ on the truncated grid
    d = amps.shape[0]
    weight = np.sqrt(np.outer(np.arange(1, d), np.arange(1, d)))
    out = np.zeros_like(amps)
    out[:-1, :-1] = weight * amps[1:, 1:]
    return out


def _raise_pair(amps: np.ndarray) -> np.ndarray:
    # â† b̂† on the truncated grid; the top row and column fall off
    d = amps.shape[0]
    weight = np.sqrt(np.outer(np.arange(1, d), np.arange(1, d)))
    out = np.zeros_like(amps)
    out[1:, 1:] = weight * amps[:-1, :-1]
    return out


def _pair_series(amps: np.ndarray, coefficient: complex, step: Any) -> np.ndarray:
    # exp(coefficient · step) applied term by term; the series terminates on the grid
    total = amps.copy()
    term = amps
    for k in range(1, amps.shape[0]):
        term = step(term) * (coefficient / k)
        if not np.any(term):
            break
        total += term
    return total


def _build(spec: InputSpec, pump: PumpSpec, n_max: int) -> FockVector:
    dim = n_max + 1 + Defaults.INPUT_PADDING
    amps = np.outer(
        _coherent_amplitudes(spec.alpha, dim),
        _squeezed_amplitudes(spec.squeeze_r, spec.squeeze_phase, dim),
    )
    if pump.gain_g > 0.0:
        # exp(τ a†b†)·cosh(g)^-(n_a+n_b+1)·exp(−τ* ab) with τ = e^{iθ}tanh g
        tau = np.exp(1j * pump.pump_phase) * math.tanh(pump.gain_g)
        amps = _pair_series(amps, -np.conj(tau), _lower_pair)
        exponent = np.add.outer(np.arange(dim), np.arange(dim)) + 1
        amps = amps * math.cosh(pump.gain_g) ** (-exponent.astype(float))
        amps = _pair_series(amps, tau, _raise_pair)
    box = amps[: n_max + 1, : n_max + 1]
    leakage = max(0.0, 1.0 - float(np.sum(np.abs(box) ** 2)))
    return FockVector(n_max=n_max, amps=box, leakage=leakage)


def estimate_cutoff(spec: InputSpec, pump: PumpSpec) -> int:
    """First-guess cutoff from the Gaussian photon moments."""
    m = propagate(spec, pump)
    reach = max(
        m.mean_a + 8 * math.sqrt(m.var_a),
        m.mean_b + 8 * math.sqrt(m.var_b),
    )
    return int(min(Defaults.MAX_CUTOFF, math.ceil(reach) + 10))


def build_state(
    spec: InputSpec, pump: PumpSpec, n_max: Optional[int] = None
) -> FockVector:
    """Fock amplitudes of the first-NBS output for the input |α⟩ ⊗ |0, ς⟩.

    With ``n_max=None`` the cutoff starts at :func:`estimate_cutoff` and grows
    until the leakage drops below ``Tolerances.AUTO_LEAKAGE``.
    """
    validate_cutoff(n_max)
    if n_max is not None:
        state = _build(spec, pump, n_max)
        if state.leakage >= Tolerances.MAX_LEAKAGE:
            raise TruncationOverflow(state.leakage, n_max, Tolerances.MAX_LEAKAGE)
        return state

    cutoff = estimate_cutoff(spec, pump)
    while True:
        state = _build(spec, pump, cutoff)
        if state.leakage < Tolerances.AUTO_LEAKAGE:
            return state
        if cutoff >= Defaults.MAX_CUTOFF:
            if state.leakage < Tolerances.MAX_LEAKAGE:
                return state
            raise TruncationOverflow(state.leakage, cutoff, Tolerances.MAX_LEAKAGE)
        grown = min(Defaults.MAX_CUTOFF, math.ceil(1.5 * cutoff))
        logger.debug("leakage %.3e at n_max=%d, growing to %d", state.leakage, cutoff, grown)
        cutoff = grown


def _phase_factors(dim: int, phi_a: float, phi_b: float) -> np.ndarray:
    n = np.arange(dim)
    return np.exp(1j * np.add.outer(phi_a * n, phi_b * n))


@overload
def apply_phase(state: FockVector, phi_a: float, phi_b: float) -> FockVector: ...


@overload
def apply_phase(
    state: FockDensityMatrix, phi_a: float, phi_b: float
) -> FockDensityMatrix: ...


def apply_phase(state: FockState, phi_a: float, phi_b: float) -> FockState:
    """Apply exp(iφ_a n̂_a)·exp(iφ_b n̂_b)."""
    factors = _phase_factors(state.dim, phi_a, phi_b)
    if isinstance(state, FockVector):
        return FockVector(
            n_max=state.n_max, amps=state.amps * factors, leakage=state.leakage
        )
    flat = factors.reshape(-1)
    return FockDensityMatrix(
        n_max=state.n_max,
        rho=state.rho * np.outer(flat, flat.conj()),
        leakage=state.leakage,
    )


def _loss_weights(eta: float, dim: int) -> np.ndarray:
    # weights[l, m] = sqrt(C(m+l, l) (1−η)^l η^m): amplitude of |m+l⟩ → |m⟩
    l = np.arange(dim)[:, None]
    m = np.arange(dim)[None, :]
    return np.sqrt(binom.pmf(l, m + l, 1.0 - eta))


def loss_channel(
    rho: FockDensityMatrix, eta_a: float, eta_b: float
) -> FockDensityMatrix:
    """Beam-splitter photon loss with transmissions (η_a, η_b)."""
    d = rho.dim
    tensor = rho.tensor()
    for axis, eta in ((0, eta_a), (1, eta_b)):
        if eta == 1.0:
            continue
        weights = _loss_weights(eta, d)
        out = np.zeros_like(tensor)
        for l in range(d):
            kl = weights[l, : d - l]
            if axis == 0:
                out[: d - l, :, : d - l, :] += (
                    kl[:, None, None, None]
                    * kl[None, None, :, None]
                    * tensor[l:, :, l:, :]
                )
            else:
                out[:, : d - l, :, : d - l] += (
                    kl[None, :, None, None]
                    * kl[None, None, None, :]
                    * tensor[:, l:, :, l:]
                )
        tensor = out
    return rho.with_tensor(tensor)


def dephase_channel(
    rho: FockDensityMatrix, beta_a: float, beta_b: float
) -> FockDensityMatrix:
    """Phase diffusion: coherences damped by exp(−β_a²Δn_a²)·exp(−β_b²Δn_b²)."""
    n = np.arange(rho.dim)
    gap = np.subtract.outer(n, n) ** 2
    damp_a = np.exp(-(beta_a**2) * gap)
    damp_b = np.exp(-(beta_b**2) * gap)
    tensor = rho.tensor() * (
        damp_a[:, None, :, None] * damp_b[None, :, None, :]
    )
    return rho.with_tensor(tensor)


def noisy_state(state: FockVector, noise: NoiseParams) -> FockDensityMatrix:
    """Loss followed by phase diffusion on |ψ⟩⟨ψ|."""
    rho = loss_channel(state.to_density_matrix(), noise.eta_a, noise.eta_b)
    return dephase_channel(rho, noise.beta_a, noise.beta_b)


def _normalized_distribution(state: FockState) -> np.ndarray:
    probabilities = state.probabilities
    return probabilities / np.sum(probabilities)


def exact_moments(state: FockState) -> PhotonMoments:
    """Photon-number moments by direct summation over the number basis."""
    p = _normalized_distribution(state)
    n = np.arange(state.dim, dtype=float)
    p_a, p_b = p.sum(axis=1), p.sum(axis=0)
    mean_a, mean_b = float(n @ p_a), float(n @ p_b)
    var_a = float(((n - mean_a) ** 2) @ p_a)
    var_b = float(((n - mean_b) ** 2) @ p_b)
    cov_ab = float((n - mean_a) @ p @ (n - mean_b))
    return PhotonMoments.create(
        mean_a=mean_a, mean_b=mean_b, var_a=var_a, var_b=var_b, cov_ab=cov_ab
    )


def pure_qfi(state: FockVector) -> float:
    """Var(n_a + n_b) of the normalized state, equal to 4Var(K_z)."""
    p = _normalized_distribution(state)
    total = np.add.outer(np.arange(state.dim), np.arange(state.dim)).astype(float)
    mean = float(np.sum(p * total))
    return float(np.sum(p * (total - mean) ** 2))


def fidelity_qfi(state: FockVector, step: float = 1e-4) -> float:
    """QFI from the fidelity 8(1 − |⟨ψ|U(δ)|ψ⟩|)/δ² under the balanced split."""
    normalized = state.amps / math.sqrt(state.norm_squared)
    shifted = normalized * _phase_factors(state.dim, step / 2, step / 2)
    overlap = abs(complex(np.vdot(normalized, shifted)))
    return 8 * (1 - overlap) / step**2


def mixed_qfi(rho: FockDensityMatrix) -> float:
    """Exact QFI of ρ(φ) for the balanced phase φ_a = φ_b = φ/2 via the SLD sum."""
    if rho.trace_deficit > Tolerances.MAX_TRACE_DEFICIT:
        raise IllConditioned(rho.trace_deficit, Tolerances.MAX_TRACE_DEFICIT)
    matrix = rho.rho / rho.trace
    d = rho.dim
    total = np.add.outer(np.arange(d), np.arange(d)).reshape(-1).astype(float)
    derivative = 0.5j * np.subtract.outer(total, total) * matrix
    eigenvalues, vectors = np.linalg.eigh(matrix)
    rotated = vectors.conj().T @ derivative @ vectors
    pair_sums = np.add.outer(eigenvalues, eigenvalues)
    keep = pair_sums > Tolerances.EIGENVALUE_FLOOR
    dropped = int(np.count_nonzero(~keep))
    if dropped:
        logger.debug("SLD sum dropped %d eigenvalue pairs below the floor", dropped)
    weights = np.zeros_like(pair_sums)
    weights[keep] = 2.0 / pair_sums[keep]
    return float(np.sum(weights * np.abs(rotated) ** 2))


def _conditional_generator_moments(
    eta: float, gamma: float, dim: int
) -> Tuple[np.ndarray, np.ndarray]:
    # Kraus Π_l(φ) = K_l e^{iφ(n̂ − γ′l)}: E[n − γ′l | n] and E[(n − γ′l)² | n]
    n = np.arange(dim)[:, None]
    l = np.arange(dim)[None, :]
    weights = binom.pmf(l, n, 1.0 - eta)
    generator = n - gamma * l
    return (
        np.sum(weights * generator, axis=1),
        np.sum(weights * generator**2, axis=1),
    )


def kraus_cq_check(
    state: FockVector, noise: NoiseParams, v: VariationalParams
) -> float:
    """C_Q = 4(⟨H₁⟩ − |⟨H₂⟩|²) by explicit sums over the loss Kraus operators.

    The diffusion environment contributes through its vacuum quadrature
    variance; the loss part is enumerated outcome by outcome.
    """
    if state.leakage >= Tolerances.MAX_LEAKAGE:
        raise TruncationOverflow(state.leakage, state.n_max, Tolerances.MAX_LEAKAGE)
    p = _normalized_distribution(state)
    first_a, second_a = _conditional_generator_moments(
        noise.eta_a, v.gamma_prime_a, state.dim
    )
    first_b, second_b = _conditional_generator_moments(
        noise.eta_b, v.gamma_prime_b, state.dim
    )
    # outcomes on the two arms are conditionally independent given (n_a, n_b)
    h1 = float(
        p.sum(axis=1) @ second_a
        + p.sum(axis=0) @ second_b
        + 2 * first_a @ p @ first_b
    )
    h2 = float(p.sum(axis=1) @ first_a + p.sum(axis=0) @ first_b)
    loss_part = h1 - h2**2

    def environment(beta: float) -> float:
        if beta == 0.0:
            return diffusion_penalty(beta, v.lam)
        return 4 * v.lam**2 * VACUUM_QUADRATURE_VARIANCE / (16 * beta**2)

    return (
        (1 + v.lam) ** 2 * loss_part
        + environment(noise.beta_a)
        + environment(noise.beta_b)
    )
