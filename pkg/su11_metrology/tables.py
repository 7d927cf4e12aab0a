"""CSV emission with a ``#``-prefixed metadata block."""

import io
import json
from pathlib import Path
from typing import Any, Dict, Optional, TextIO, Union

import pandas as pd

FLOAT_FORMAT = "%.16e"

CONVENTIONS = {
    "quadratures": "x=(a+a^dag)/sqrt2, vacuum covariance I/2, order (x_a,p_a,x_b,p_b)",
    "squeezing": "squeeze_phase=0 squeezes x",
    "nbs": "a -> cosh(g) a + exp(i pump_phase) sinh(g) b^dag",
    "n_tot": "mean_a + mean_b after the first nonlinear beam splitter",
    "alpha_locked": "|alpha| = exp(r)/2 when alpha is not given",
    "phase_split": "balanced phi_a = phi_b = phi/2",
}


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    if isinstance(value, (list, tuple)):
        return json.dumps([_format_value(v) if isinstance(v, float) else v for v in value])
    return str(value)


def metadata_lines(version: str, subcommand: str, parameters: Dict[str, Any]) -> str:
    """Render the metadata block; keys keep insertion order and values are deterministic."""
    lines = [f"# su11-metrology {version}", f"# subcommand: {subcommand}"]
    lines.extend(f"# param {key}: {_format_value(value)}" for key, value in parameters.items())
    lines.extend(f"# convention {key}: {text}" for key, text in CONVENTIONS.items())
    return "\n".join(lines) + "\n"


def render_table(
    frame: pd.DataFrame,
    version: str,
    subcommand: str,
    parameters: Dict[str, Any],
) -> str:
    """Render the metadata block followed by the CSV body."""
    buffer = io.StringIO()
    buffer.write(metadata_lines(version, subcommand, parameters))
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buffer.getvalue()


def write_table(
    frame: pd.DataFrame,
    out: Optional[Union[str, Path, TextIO]],
    version: str,
    subcommand: str,
    parameters: Dict[str, Any],
) -> str:
    """Write the table to a path or stream and return the rendered text."""
    text = render_table(frame, version, subcommand, parameters)
    if out is None:
        return text
    if isinstance(out, (str, Path)):
        Path(out).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return text


def read_table(source: Union[str, Path, TextIO]) -> pd.DataFrame:
    """Read a table written by :func:`write_table`, skipping the metadata block."""
    return pd.read_csv(source, comment="#")
