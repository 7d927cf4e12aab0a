"""Command-line front end writing deterministic CSV tables."""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import pandas as pd
from pydantic import (
    BaseModel,
    ConfigDict,
    ValidationError,
    ValidationInfo,
    field_validator,
)

from . import __version__
from .bounds import NoiseParams, bound_breakdown
from .critical import (
    SweepConfig,
    critical_curve,
    diffusion_sweep,
    loss_surface,
    sensitivity_surface,
    sweep_row,
)
from .exceptions import Su11MetrologyError
from .gaussian import InputSpec, PumpSpec, propagate
from .tables import write_table
from .validators import (
    Defaults,
    parse_grid,
    validate_cutoff,
    validate_non_negative,
    validate_transmission,
)
from .verification import run_oracle_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 2
EXIT_ORACLE_FAILURE = 3

Subcommand = Literal[
    "moments", "bound", "sweep-beta", "sweep-eta", "surface", "critical", "oracle-check"
]

DEFAULT_R_GRID = "0:3:16"
DEFAULT_ETA_GRID = "0.5:1:11"
DEFAULT_BETA_GRID = "0:0.1:11"
DEFAULT_SWEEP_BETAS = (0.0, 0.003, 0.01)

# keys that never reach the metadata block
_RUNTIME_KEYS = {"subcommand", "out", "workers", "verbose"}


class RunConfig(BaseModel):
    """Flat parameter set of one CLI invocation."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    subcommand: Subcommand
    g: float = Defaults.GAIN
    alpha: Optional[float] = None
    alpha_phase: float = 0.0
    r: float = Defaults.SQUEEZE_R
    squeeze_phase: float = 0.0
    pump_phase: float = 0.0
    eta_a: float = 1.0
    eta_b: float = 1.0
    beta_a: float = 0.0
    beta_b: float = 0.0
    n_max: Optional[int] = None
    grid: Optional[str] = None
    r_grid: Optional[str] = None
    eta_grid: Optional[str] = None
    beta_grid: Optional[str] = None
    out: Optional[str] = None
    seed: int = 0
    workers: int = 1
    verbose: bool = False

    @field_validator("g", "r", "beta_a", "beta_b")
    @classmethod
    def validate_non_negative_fields(cls, v: float, info: ValidationInfo) -> float:
        """Validate non-negative physical parameters."""
        return validate_non_negative(v, str(info.field_name))

    @field_validator("alpha")
    @classmethod
    def validate_alpha(cls, v: Optional[float]) -> Optional[float]:
        """Validate a non-negative coherent amplitude."""
        return None if v is None else validate_non_negative(v, "alpha")

    @field_validator("eta_a", "eta_b")
    @classmethod
    def validate_eta(cls, v: float, info: ValidationInfo) -> float:
        """Validate transmissions against (0, 1]."""
        return validate_transmission(v, str(info.field_name))

    @field_validator("n_max")
    @classmethod
    def validate_n_max(cls, v: Optional[int]) -> Optional[int]:
        """Validate the Fock cutoff."""
        return validate_cutoff(v)

    @field_validator("grid", "r_grid", "eta_grid", "beta_grid")
    @classmethod
    def validate_grid(cls, v: Optional[str], info: ValidationInfo) -> Optional[str]:
        """Validate ``start:stop:count`` grid strings."""
        if v is not None:
            parse_grid(v, str(info.field_name))
        return v

    @field_validator("workers")
    @classmethod
    def validate_workers(cls, v: int) -> int:
        """Validate a positive worker count."""
        if v < 1:
            raise ValueError(f"workers={v} outside accepted range [1, inf)")
        return v

    @classmethod
    def from_payload(cls, payload: Union[str, Dict[str, Any]]) -> "RunConfig":
        """Create a RunConfig from a JSON string or a dictionary."""
        if isinstance(payload, str):
            try:
                payload_dict = json.loads(payload)
            except json.JSONDecodeError as e:
                raise ValueError(f"Invalid JSON payload: {e}") from e
        else:
            payload_dict = payload

        if not isinstance(payload_dict, dict):
            raise ValueError("Payload must be a dictionary")

        return cls.model_validate(payload_dict)

    @property
    def input_spec(self) -> InputSpec:
        """Input state; ALPHA_LOCKED amplitude when alpha is not given."""
        if self.alpha is None:
            return InputSpec.alpha_locked(self.r, self.alpha_phase, self.squeeze_phase)
        return InputSpec.create(self.alpha, self.r, self.alpha_phase, self.squeeze_phase)

    @property
    def pump(self) -> PumpSpec:
        """Pump of the first nonlinear beam splitter."""
        return PumpSpec.create(self.g, self.pump_phase)

    @property
    def noise(self) -> NoiseParams:
        """Per-arm noise parameters."""
        return NoiseParams.create(self.eta_a, self.eta_b, self.beta_a, self.beta_b)

    def axis(self, name: str, default: str) -> List[float]:
        """Grid values of one axis, with ``grid`` standing in for the primary axis."""
        primary = {
            "sweep-beta": "r",
            "critical": "r",
            "sweep-eta": "eta",
            "surface": "eta",
        }.get(self.subcommand)
        explicit = getattr(self, f"{name}_grid")
        if explicit is None and primary == name:
            explicit = self.grid
        return parse_grid(explicit or default, f"{name}_grid")

    def sweep_config(self) -> SweepConfig:
        """Sweep configuration of the table subcommands."""
        return SweepConfig.create(
            gain_g=self.g,
            r_values=self.axis("r", DEFAULT_R_GRID),
            eta_values=self.axis("eta", DEFAULT_ETA_GRID),
            beta_values=(
                self.axis("beta", DEFAULT_BETA_GRID)
                if self.subcommand == "surface" or self.beta_grid is not None
                else DEFAULT_SWEEP_BETAS
            ),
            pump_phase=self.pump_phase,
            alpha_phase=self.alpha_phase,
            squeeze_phase=self.squeeze_phase,
        )

    def metadata(self) -> Dict[str, Any]:
        """Parameters recorded in the CSV metadata block."""
        params = self.model_dump(exclude=_RUNTIME_KEYS)
        params["alpha_resolved"] = self.input_spec.alpha_mag
        return params


def _point_columns(config: RunConfig) -> Dict[str, Any]:
    spec = config.input_spec
    return {"g": config.g, "alpha": spec.alpha_mag, "r": spec.squeeze_r}


def _moments_table(config: RunConfig) -> pd.DataFrame:
    m = propagate(config.input_spec, config.pump)
    return pd.DataFrame(
        [{**_point_columns(config), **m.build(), "N_Tot": m.n_total}]
    )


def _bound_table(config: RunConfig) -> pd.DataFrame:
    row = sweep_row(config.pump, config.input_spec, config.noise)
    report = bound_breakdown(propagate(config.input_spec, config.pump), config.noise)
    row.update(
        {
            "lambda_opt": report.lambda_opt,
            "gamma_opt_a": report.gamma_opt[0],
            "gamma_opt_b": report.gamma_opt[1],
        }
    )
    return pd.DataFrame([row])


def _oracle_table(config: RunConfig) -> Tuple[pd.DataFrame, bool]:
    results = run_oracle_suite(seed=config.seed, n_max=config.n_max)
    frame = pd.DataFrame([result.build() for result in results])
    return frame, all(result.passed for result in results)


def run(config: RunConfig) -> int:
    """Execute one subcommand and write its table."""
    passed = True
    if config.subcommand == "moments":
        frame = _moments_table(config)
    elif config.subcommand == "bound":
        frame = _bound_table(config)
    elif config.subcommand == "sweep-beta":
        frame = diffusion_sweep(config.sweep_config(), config.workers)
    elif config.subcommand == "sweep-eta":
        frame = loss_surface(config.sweep_config(), config.input_spec, config.workers)
    elif config.subcommand == "surface":
        frame = sensitivity_surface(config.sweep_config(), config.input_spec, config.workers)
    elif config.subcommand == "critical":
        frame = critical_curve(config.sweep_config(), config.workers)
    else:
        frame, passed = _oracle_table(config)

    text = write_table(frame, config.out, __version__, config.subcommand, config.metadata())
    if config.out is None:
        sys.stdout.write(text)
    if not passed:
        logger.warning("oracle check failed")
        return EXIT_ORACLE_FAILURE
    return EXIT_OK


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    # argparse defaults stay None so only given flags override a --config payload
    parser.add_argument("--g", type=float, help="NBS gain (default 2)")
    parser.add_argument("--alpha", type=float, help="coherent amplitude |alpha| (default exp(r)/2)")
    parser.add_argument("--alpha-phase", type=float, help="coherent phase")
    parser.add_argument("--r", type=float, help="squeezing parameter (default 1)")
    parser.add_argument("--squeeze-phase", type=float, help="squeezing phase")
    parser.add_argument("--pump-phase", type=float, help="pump phase")
    parser.add_argument("--eta-a", type=float, help="transmission of arm a")
    parser.add_argument("--eta-b", type=float, help="transmission of arm b")
    parser.add_argument("--beta-a", type=float, help="phase diffusion of arm a")
    parser.add_argument("--beta-b", type=float, help="phase diffusion of arm b")
    parser.add_argument("--n-max", type=int, help="Fock cutoff")
    parser.add_argument("--grid", help="start:stop:count of the primary sweep axis")
    parser.add_argument("--r-grid", help="start:stop:count of r")
    parser.add_argument("--eta-grid", help="start:stop:count of eta")
    parser.add_argument("--beta-grid", help="start:stop:count of beta")
    parser.add_argument("--out", help="output CSV path (default stdout)")
    parser.add_argument("--seed", type=int, help="seed of the randomized oracle checks")
    parser.add_argument("--workers", type=int, help="worker threads for sweeps")
    parser.add_argument("--config", help="JSON file with parameters; flags override it")
    parser.add_argument("-v", "--verbose", action="store_true", default=None, help="debug logging")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subparser per subcommand."""
    parser = argparse.ArgumentParser(
        prog="su11-metrology",
        description="QFI bounds and phase-sensitivity limits of an SU(1,1) interferometer",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for name, help_text in (
        ("moments", "photon-number moments after the first NBS"),
        ("bound", "full bound breakdown at one parameter set"),
        ("sweep-beta", "delta_phi versus N_Tot for several beta at eta = 1"),
        ("sweep-eta", "delta_phi over the eta_a x eta_b grid at beta = 0"),
        ("surface", "delta_phi over the equal-arm eta x beta grid"),
        ("critical", "beta_cri and eta_cri along the r sweep"),
        ("oracle-check", "dual-route verification suite"),
    ):
        _add_common_arguments(subparsers.add_parser(name, help=help_text))
    return parser


def _payload_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    payload: Dict[str, Any] = {}
    if args.config is not None:
        with open(args.config, encoding="utf-8") as handle:
            loaded = json.load(handle)
        if not isinstance(loaded, dict):
            raise ValueError(f"config file {args.config} must hold a JSON object")
        payload.update(loaded)
    for key, value in vars(args).items():
        if key != "config" and value is not None:
            payload[key] = value
    return payload


def _format_validation_error(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "config"
        lines.append(f"{location}: {item['msg']}")
    return "\n".join(lines)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Console entry point."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = RunConfig.from_payload(_payload_from_args(args))
        return run(config)
    except ValidationError as e:
        print(f"error: {_format_validation_error(e)}", file=sys.stderr)
    except (Su11MetrologyError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
    return EXIT_DOMAIN_ERROR


if __name__ == "__main__":
    sys.exit(main())
