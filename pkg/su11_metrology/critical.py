"""Critical noise levels and the sweep tables built on them.

Thresholds are found by bisection on ``Δφ − SQL``. Equal-arm noise is used
throughout: ``η_a = η_b = η`` and ``β_a = β_b = β``.
"""

import concurrent.futures
import logging
import math
from enum import Enum
from typing import (
    Any,
    Callable,
    Dict,
    List,
    Literal,
    Optional,
    Sequence,
    Tuple,
    TypeVar,
    Union,
)

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.optimize import brentq

from .bounds import NoiseParams, bound_breakdown, qfi_lossless
from .exceptions import BracketFailure, NonPositivePhotonNumber
from .gaussian import InputSpec, PhotonMoments, PumpSpec, propagate
from .validators import (
    Defaults,
    Tolerances,
    parse_grid,
    validate_grid_values,
    validate_non_negative,
    validate_point_count,
)

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["g", "alpha", "r", "eta_a", "eta_b", "beta_a", "beta_b"]
METRIC_COLUMNS = [
    "N_Tot",
    "F_Q",
    "C_tilde",
    "C_phi",
    "delta_phi",
    "SQL",
    "HL",
    "beats_sql",
]
CRITICAL_COLUMNS = [
    "r",
    "N_Tot",
    "F_Q",
    "beta_cri",
    "beta_status",
    "beta_iterations",
    "eta_cri",
    "eta_status",
    "eta_iterations",
    "SQL",
    "HL",
]

Point = Union[InputSpec, PhotonMoments]
T = TypeVar("T")
R = TypeVar("R")


class InputRule(str, Enum):
    """How the sweep inputs are generated."""

    ALPHA_LOCKED = "alpha_locked"
    EXPLICIT = "explicit"


class ThresholdStatus(str, Enum):
    """Outcome of a threshold solve."""

    FOUND = "found"
    NO_CROSSING_ALWAYS_BEATS = "no_crossing_always_beats"
    NO_CROSSING_NEVER_BEATS = "no_crossing_never_beats"


def _default_r_values() -> Tuple[float, ...]:
    return tuple(parse_grid("0:3:16"))


class SweepConfig(BaseModel):
    """Gain, input rule and noise grids of a sweep."""

    model_config = ConfigDict(frozen=True)

    gain_g: float = Defaults.GAIN
    pump_phase: float = 0.0
    input_rule: InputRule = InputRule.ALPHA_LOCKED
    r_values: Tuple[float, ...] = Field(default_factory=_default_r_values)
    alpha_phase: float = 0.0
    squeeze_phase: float = 0.0
    inputs: Tuple[InputSpec, ...] = ()
    eta_values: Tuple[float, ...] = (1.0,)
    beta_values: Tuple[float, ...] = (0.0,)

    @field_validator("gain_g")
    @classmethod
    def validate_gain(cls, v: float) -> float:
        """Validate a non-negative gain."""
        return validate_non_negative(v, "gain_g")

    @field_validator("r_values")
    @classmethod
    def validate_r_values(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        """Validate non-negative squeezing values."""
        return tuple(validate_grid_values(v, (0.0, math.inf), "r", closed_low=True))

    @field_validator("eta_values")
    @classmethod
    def validate_eta_values(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        """Validate transmissions against (0, 1]."""
        return tuple(validate_grid_values(v, (0.0, 1.0), "eta", closed_low=False))

    @field_validator("beta_values")
    @classmethod
    def validate_beta_values(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        """Validate non-negative diffusion values."""
        return tuple(validate_grid_values(v, (0.0, math.inf), "beta", closed_low=True))

    @model_validator(mode="after")
    def validate_point_axis(self) -> "SweepConfig":
        """Validate the number of sweep points along the input axis."""
        validate_point_count(self.n_points)
        return self

    @property
    def n_points(self) -> int:
        """Number of inputs along the sweep axis."""
        if self.input_rule is InputRule.EXPLICIT:
            return len(self.inputs)
        return len(self.r_values)

    @property
    def pump(self) -> PumpSpec:
        """Pump of the first nonlinear beam splitter."""
        return PumpSpec.create(self.gain_g, self.pump_phase)

    def input_specs(self) -> List[InputSpec]:
        """Inputs along the sweep axis, in order."""
        if self.input_rule is InputRule.EXPLICIT:
            return list(self.inputs)
        return [
            InputSpec.alpha_locked(r, self.alpha_phase, self.squeeze_phase)
            for r in self.r_values
        ]

    @classmethod
    def create(
        cls,
        gain_g: float = Defaults.GAIN,
        r_values: Optional[Sequence[float]] = None,
        eta_values: Sequence[float] = (1.0,),
        beta_values: Sequence[float] = (0.0,),
        **kwargs: Any,
    ) -> "SweepConfig":
        """Create an ALPHA_LOCKED sweep configuration."""
        if r_values is not None:
            kwargs["r_values"] = tuple(r_values)
        return cls(
            gain_g=gain_g,
            eta_values=tuple(eta_values),
            beta_values=tuple(beta_values),
            **kwargs,
        )

    @classmethod
    def explicit(
        cls, inputs: Sequence[InputSpec], gain_g: float = Defaults.GAIN, **kwargs: Any
    ) -> "SweepConfig":
        """Create a sweep over an explicit list of inputs."""
        return cls(
            gain_g=gain_g,
            input_rule=InputRule.EXPLICIT,
            inputs=tuple(inputs),
            **kwargs,
        )

    def with_grids(
        self,
        eta_values: Optional[Sequence[float]] = None,
        beta_values: Optional[Sequence[float]] = None,
    ) -> "SweepConfig":
        """Return a copy with new noise grids."""
        update: Dict[str, Any] = {}
        if eta_values is not None:
            update["eta_values"] = tuple(eta_values)
        if beta_values is not None:
            update["beta_values"] = tuple(beta_values)
        return SweepConfig.model_validate({**self.model_dump(), **update})


class ThresholdResult(BaseModel):
    """Critical noise level of one sweep point."""

    model_config = ConfigDict(frozen=True)

    parameter: Literal["beta", "eta"]
    n_tot: float
    critical_value: Optional[float] = None
    bracket: Tuple[float, float]
    iterations: int = 0
    status: ThresholdStatus

    @field_validator("n_tot")
    @classmethod
    def validate_n_tot(cls, v: float) -> float:
        """Validate a positive photon number."""
        if not v > 0:
            raise ValueError(f"n_tot={v} outside accepted range (0, inf)")
        return v

    @model_validator(mode="after")
    def validate_status(self) -> "ThresholdResult":
        """A FOUND result carries its root and only it does."""
        found = self.status is ThresholdStatus.FOUND
        if found != (self.critical_value is not None):
            raise ValueError(
                f"status {self.status.value} inconsistent with critical_value={self.critical_value}"
            )
        return self

    def build(self) -> Dict[str, Any]:
        """Build the result as a dictionary keyed by parameter name."""
        value = math.nan if self.critical_value is None else self.critical_value
        return {
            f"{self.parameter}_cri": value,
            f"{self.parameter}_status": self.status.value,
            f"{self.parameter}_iterations": self.iterations,
        }


class SensitivityPoint(BaseModel):
    """Bound and reference limits at one parameter set."""

    model_config = ConfigDict(frozen=True)

    n_tot: float
    f_q: float
    c_tilde: float
    c_phi: float
    delta_phi: float
    sql: float
    hl: float

    @property
    def beats_sql(self) -> bool:
        """True when the bound lies below the standard quantum limit."""
        return self.delta_phi < self.sql

    def build(self) -> Dict[str, Any]:
        """Build the metrics as an ordered row fragment."""
        return {
            "N_Tot": self.n_tot,
            "F_Q": self.f_q,
            "C_tilde": self.c_tilde,
            "C_phi": self.c_phi,
            "delta_phi": self.delta_phi,
            "SQL": self.sql,
            "HL": self.hl,
            "beats_sql": self.beats_sql,
        }


def n_total(m: PhotonMoments) -> float:
    """Mean photon number inside the interferometer."""
    return m.mean_a + m.mean_b


def _validate_photon_number(n_tot: float) -> None:
    if not (math.isfinite(n_tot) and n_tot > 0):
        raise NonPositivePhotonNumber(f"n_tot={n_tot} outside accepted range (0, inf)")


def sql(n_tot: float) -> float:
    """Standard quantum limit 1/sqrt(N_Tot)."""
    _validate_photon_number(n_tot)
    return 1 / math.sqrt(n_tot)


def hl(n_tot: float) -> float:
    """Heisenberg limit 1/N_Tot."""
    _validate_photon_number(n_tot)
    return 1 / n_tot


def evaluate_point(m: PhotonMoments, noise: NoiseParams) -> SensitivityPoint:
    """Evaluate the bound together with SQL and HL."""
    total = n_total(m)
    report = bound_breakdown(m, noise)
    return SensitivityPoint(
        n_tot=total,
        f_q=report.f_q_lossless,
        c_tilde=report.c_tilde,
        c_phi=report.c_phi,
        delta_phi=report.delta_phi,
        sql=sql(total),
        hl=hl(total),
    )


def alpha_locked_input(
    r: float, alpha_phase: float = 0.0, squeeze_phase: float = 0.0
) -> InputSpec:
    """Input with |α|² = e^{2r}/4."""
    return InputSpec.alpha_locked(r, alpha_phase, squeeze_phase)


def input_for_total(
    n_tot: float, pump: PumpSpec, alpha_phase: float = 0.0, squeeze_phase: float = 0.0
) -> InputSpec:
    """ALPHA_LOCKED input whose N_Tot equals ``n_tot``."""

    def excess(r: float) -> float:
        spec = alpha_locked_input(r, alpha_phase, squeeze_phase)
        return n_total(propagate(spec, pump)) - n_tot

    floor = excess(0.0)
    if floor > 0:
        raise ValueError(
            f"n_tot={n_tot} outside accepted range [{n_tot + floor}, inf) for gain {pump.gain_g}"
        )
    high = 1.0
    for _ in range(Tolerances.BRACKET_MAX_DOUBLINGS):
        if excess(high) >= 0:
            break
        high *= 2
    else:
        raise BracketFailure(f"no squeezing reaches n_tot={n_tot}")
    r = brentq(excess, 0.0, high, xtol=1e-14, rtol=1e-14)
    return alpha_locked_input(float(r), alpha_phase, squeeze_phase)


def _resolve_moments(cfg: SweepConfig, point: Point) -> PhotonMoments:
    if isinstance(point, PhotonMoments):
        return point
    return propagate(point, cfg.pump)


def _bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    f_lo: float,
    f_hi: float,
    ftol: float,
) -> Tuple[float, int, Tuple[float, float]]:
    """Bisection on a monotone function with f_lo and f_hi of opposite sign."""
    # rounding near the root stays well inside ftol
    slack = ftol
    best, f_best = (lo, f_lo) if abs(f_lo) <= abs(f_hi) else (hi, f_hi)
    iterations = 0
    while iterations < Tolerances.BISECTION_MAX_ITERATIONS:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = f(mid)
        iterations += 1
        if not min(f_lo, f_hi) - slack <= f_mid <= max(f_lo, f_hi) + slack:
            raise BracketFailure(
                f"monotonicity broken at {mid}: f={f_mid} outside [{f_lo}, {f_hi}]"
            )
        if abs(f_mid) < abs(f_best):
            best, f_best = mid, f_mid
        if f_mid == 0.0:
            break
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
        if hi - lo <= Tolerances.BISECTION_XTOL and abs(f_best) <= ftol:
            break
    logger.debug("bisection stopped after %d iterations at %r (residual %.3e)", iterations, best, f_best)
    return best, iterations, (lo, hi)


def beta_critical(cfg: SweepConfig, point: Point) -> ThresholdResult:
    """Largest equal-arm β at which the lossless device still beats the SQL."""
    m = _resolve_moments(cfg, point)
    total = n_total(m)
    limit = sql(total)

    def gap(beta: float) -> float:
        return bound_breakdown(m, NoiseParams.symmetric(1.0, beta)).delta_phi - limit

    f_lo = gap(0.0)
    if f_lo >= 0:
        return ThresholdResult(
            parameter="beta",
            n_tot=total,
            bracket=(0.0, 0.0),
            status=ThresholdStatus.NO_CROSSING_NEVER_BEATS,
        )
    hi, f_hi = Tolerances.BRACKET_START, gap(Tolerances.BRACKET_START)
    doublings = 0
    while f_hi < 0:
        if doublings >= Tolerances.BRACKET_MAX_DOUBLINGS:
            raise BracketFailure(f"no sign change up to beta={hi}")
        candidate = 2 * hi
        f_candidate = gap(candidate)
        if f_candidate < f_hi:
            raise BracketFailure(f"delta_phi decreased between beta={hi} and beta={candidate}")
        hi, f_hi = candidate, f_candidate
        doublings += 1
    logger.debug("beta bracket [0, %r] after %d doublings", hi, doublings)

    root, iterations, bracket = _bisect(
        gap, 0.0, hi, f_lo, f_hi, Tolerances.BISECTION_FTOL * limit
    )
    return ThresholdResult(
        parameter="beta",
        n_tot=total,
        critical_value=root,
        bracket=bracket,
        iterations=iterations,
        status=ThresholdStatus.FOUND,
    )


def eta_critical(cfg: SweepConfig, point: Point) -> ThresholdResult:
    """Smallest equal-arm η at which the diffusion-free device still beats the SQL."""
    m = _resolve_moments(cfg, point)
    total = n_total(m)
    limit = sql(total)

    def gap(eta: float) -> float:
        return bound_breakdown(m, NoiseParams.symmetric(eta, 0.0)).delta_phi - limit

    lo, hi = Tolerances.ETA_FLOOR, 1.0
    f_hi = gap(hi)
    if f_hi >= 0:
        return ThresholdResult(
            parameter="eta",
            n_tot=total,
            bracket=(hi, hi),
            status=ThresholdStatus.NO_CROSSING_NEVER_BEATS,
        )
    f_lo = gap(lo)
    if f_lo < 0:
        return ThresholdResult(
            parameter="eta",
            n_tot=total,
            bracket=(lo, hi),
            status=ThresholdStatus.NO_CROSSING_ALWAYS_BEATS,
        )

    root, iterations, bracket = _bisect(
        gap, lo, hi, f_lo, f_hi, Tolerances.BISECTION_FTOL * limit
    )
    return ThresholdResult(
        parameter="eta",
        n_tot=total,
        critical_value=root,
        bracket=bracket,
        iterations=iterations,
        status=ThresholdStatus.FOUND,
    )


def _map_ordered(fn: Callable[[T], R], items: Sequence[T], workers: int = 1) -> List[R]:
    # Executor.map yields in submission order
    if workers <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))


def sweep_row(
    pump: PumpSpec, spec: InputSpec, noise: NoiseParams
) -> Dict[str, Any]:
    """One table row: sweep variables followed by the sensitivity metrics."""
    point = evaluate_point(propagate(spec, pump), noise)
    return {
        "g": pump.gain_g,
        "alpha": spec.alpha_mag,
        "r": spec.squeeze_r,
        **noise.build(),
        **point.build(),
    }


def _frame(rows: List[Dict[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS + METRIC_COLUMNS)


def diffusion_sweep(cfg: SweepConfig, workers: int = 1) -> pd.DataFrame:
    """Δφ along the input sweep for each β at η = 1, β-major."""
    tasks = [
        (spec, NoiseParams.symmetric(1.0, beta))
        for beta in cfg.beta_values
        for spec in cfg.input_specs()
    ]
    pump = cfg.pump
    return _frame(_map_ordered(lambda task: sweep_row(pump, *task), tasks, workers))


def loss_surface(
    cfg: SweepConfig, point: Optional[InputSpec] = None, workers: int = 1
) -> pd.DataFrame:
    """Δφ over the η_a × η_b grid at β = 0, η_a-major."""
    spec = point or alpha_locked_input(Defaults.SQUEEZE_R)
    tasks = [
        NoiseParams.create(eta_a, eta_b)
        for eta_a in cfg.eta_values
        for eta_b in cfg.eta_values
    ]
    pump = cfg.pump
    return _frame(_map_ordered(lambda noise: sweep_row(pump, spec, noise), tasks, workers))


def sensitivity_surface(
    cfg: SweepConfig, point: Optional[InputSpec] = None, workers: int = 1
) -> pd.DataFrame:
    """Δφ over the equal-arm η × β grid, η-major."""
    spec = point or alpha_locked_input(Defaults.SQUEEZE_R)
    tasks = [
        NoiseParams.symmetric(eta, beta)
        for eta in cfg.eta_values
        for beta in cfg.beta_values
    ]
    pump = cfg.pump
    return _frame(_map_ordered(lambda noise: sweep_row(pump, spec, noise), tasks, workers))


def _critical_row(cfg: SweepConfig, spec: InputSpec) -> Dict[str, Any]:
    m = propagate(spec, cfg.pump)
    total = n_total(m)
    return {
        "r": spec.squeeze_r,
        "N_Tot": total,
        "F_Q": qfi_lossless(m),
        **beta_critical(cfg, m).build(),
        **eta_critical(cfg, m).build(),
        "SQL": sql(total),
        "HL": hl(total),
    }


def critical_curve(cfg: SweepConfig, workers: int = 1) -> pd.DataFrame:
    """β_cri and η_cri along the input sweep."""
    rows = _map_ordered(lambda spec: _critical_row(cfg, spec), cfg.input_specs(), workers)
    return pd.DataFrame(rows, columns=CRITICAL_COLUMNS)

