"""Custom validation logic for physical-domain and numerical constraints."""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np


class Tolerances:
    """Numerical tolerances shared across the package."""

    # Gaussian states
    COV_SYMMETRY = 1e-12
    SYMPLECTIC_FLOOR = 1e-9
    CAUCHY_SCHWARZ = 1e-9
    NEGATIVE_ROUNDOFF = 1e-9

    # Bounds
    CLOSED_FORM_AGREEMENT = 1e-6
    SINGULAR_CONDITION = 1e12
    ORDERING_SLACK = 1e-9

    # Threshold solver
    BISECTION_XTOL = 1e-10
    BISECTION_FTOL = 1e-9
    BISECTION_MAX_ITERATIONS = 200
    BRACKET_START = 0.1
    BRACKET_MAX_DOUBLINGS = 60
    ETA_FLOOR = 1e-6

    # Fock oracle
    MAX_LEAKAGE = 1e-8
    AUTO_LEAKAGE = 1e-12
    MAX_TRACE_DEFICIT = 1e-6
    EIGENVALUE_FLOOR = 1e-12
    HERMITICITY = 1e-12


class Defaults:
    """Default parameter values of the figure reproductions."""

    GAIN = 2.0
    SQUEEZE_R = 1.0
    FOCK_CUTOFF = 40
    INPUT_PADDING = 40
    MAX_CUTOFF = 600


def validate_non_negative(value: float, name: str) -> float:
    """Validate a finite, non-negative real."""
    if not math.isfinite(value) or value < 0:
        raise ValueError(f"{name}={value} outside accepted range [0, inf)")
    return float(value)


def validate_finite(value: float, name: str) -> float:
    """Validate a finite real."""
    if not math.isfinite(value):
        raise ValueError(f"{name}={value} must be a finite real")
    return float(value)


def validate_transmission(value: float, name: str = "eta") -> float:
    """Validate a loss transmission against (0, 1]."""
    if not math.isfinite(value) or value <= 0 or value > 1:
        raise ValueError(f"{name}={value} outside accepted range (0, 1]")
    return float(value)


def normalize_phase(value: float, name: str = "phase") -> float:
    """Reduce a phase into [0, 2π)."""
    phase = math.fmod(validate_finite(value, name), 2 * math.pi)
    if phase < 0:
        phase += 2 * math.pi
    # fmod can land exactly on 2π after the shift
    return 0.0 if phase >= 2 * math.pi else phase


def validate_cutoff(n_max: Optional[int]) -> Optional[int]:
    """Validate a per-mode Fock cutoff."""
    if n_max is not None and n_max < 1:
        raise ValueError(f"n_max={n_max} outside accepted range [1, inf)")
    return n_max


def validate_point_count(n_points: int, name: str = "n_points") -> int:
    """Validate the number of points of a sweep axis."""
    if n_points < 2:
        raise ValueError(f"{name}={n_points} outside accepted range [2, inf)")
    return n_points


def validate_symmetric(matrix: np.ndarray, name: str = "cov") -> np.ndarray:
    """Validate that a real matrix is symmetric within tolerance."""
    scale = max(1.0, float(np.max(np.abs(matrix))))
    asymmetry = float(np.max(np.abs(matrix - matrix.T)))
    if asymmetry > Tolerances.COV_SYMMETRY * scale:
        raise ValueError(f"{name} is not symmetric (max deviation {asymmetry:.3e})")
    return matrix


def parse_grid(spec: str, name: str = "grid") -> List[float]:
    """Parse a ``start:stop:count`` grid specification into a list of values."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"{name}={spec!r} must have the form start:stop:count")
    try:
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2])
    except ValueError as e:
        raise ValueError(f"{name}={spec!r} must have the form start:stop:count") from e
    validate_point_count(count, f"{name} count")
    return [float(x) for x in np.linspace(start, stop, count)]


def validate_grid_values(
    values: Sequence[float], bounds: Tuple[float, float], name: str, closed_low: bool
) -> List[float]:
    """Validate that every grid value lies inside an interval."""
    low, high = bounds
    for value in values:
        below = value < low if closed_low else value <= low
        if below or value > high or not math.isfinite(value):
            bracket = "[" if closed_low else "("
            raise ValueError(
                f"{name} value {value} outside accepted range {bracket}{low}, {high}]"
            )
    return list(values)
