"""
RunConfig - Validated settings of one command invocation

Settings from the ConfigManager are overridden by command-line flags, and the
merged values are checked before any computation starts.
"""

import argparse
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import FrozenSet, Optional, Tuple

from app.config.config_manager import ConfigManager
from app.errors import ConfigurationError, WellEchoError
from app.physics.model import TimeLike, WellModel, as_time, make_model

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json", "svg")
SMOOTHINGS = ("none", "sigma")
DETECTORS = ("plateaux", "cusps", "fragments")


@dataclass(frozen=True)
class RunConfig:
    """
    Everything a command needs to run

    Attributes:
        command: Sub-command name
        lam: Expansion factor as typed ("3/2" keeps lambda exact)
        times: Snapshot times
        grid_points: Spatial grid size
        epsilon: Series truncation tolerance
        output_format: csv, json or svg
        output_path: File to write, or None to derive one from output_directory
        output_directory: Directory for derived output names
        detectors: Enabled structure detectors
        smoothing: Smoothing of the derivative series
        include_current: Whether snapshots also export the current
        xi_points: Fixed positions of a time trace
        samples: Number of tau samples in a time trace
        mirror_xi: Position whose current is compared at T/2 - t
        expectations: Whether a time trace also exports expectation values
        divisor: M of the conjecture scan
        sweep: Lambdas of the conjecture scan
        verify_lambdas: Lambdas of the acceptance suite
        verify_epsilon: Truncation tolerance of the acceptance suite
        plateau_min_width: Smallest plateau width
        cusp_kappa: Cusp detector threshold
        zero_tolerance: Support threshold of the fragment detector
        threads: Requested worker threads, 0 for one per CPU
        save_config: Whether the run's model and output settings are stored on exit
    """
    command: str
    lam: str = "1.5"
    times: Tuple[TimeLike, ...] = ()
    grid_points: int = 4096
    epsilon: float = 1e-6
    output_format: str = "csv"
    output_path: Optional[Path] = None
    output_directory: Path = Path("output")
    detectors: FrozenSet[str] = frozenset()
    smoothing: str = "none"
    include_current: bool = False
    xi_points: Tuple[float, ...] = ()
    samples: int = 400
    mirror_xi: Optional[float] = None
    expectations: bool = False
    divisor: int = 12
    sweep: Tuple[float, ...] = ()
    verify_lambdas: Tuple[float, ...] = ()
    verify_epsilon: float = 1e-6
    plateau_min_width: float = 0.05
    cusp_kappa: float = 20.0
    zero_tolerance: float = 1e-8
    threads: int = 0
    save_config: bool = False

    def model(self) -> WellModel:
        return make_model(self.lam)

    def validate(self) -> "RunConfig":
        """
        Check every field against the model preconditions

        Raises:
            ConfigurationError: on the first invalid field
        """
        if self.command in ("snapshot", "timetrace"):
            try:
                model = self.model()
            except WellEchoError as e:
                raise ConfigurationError(f"--lambda: {e}") from e
            for x in self.xi_points + ((self.mirror_xi,) if self.mirror_xi is not None else ()):
                if not 0.0 <= x <= model.lam:
                    raise ConfigurationError(f"--xi {x} lies outside [0, {model.lam}]")
        if not (0.0 < self.epsilon < 1.0) or not (0.0 < self.verify_epsilon < 1.0):
            raise ConfigurationError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.grid_points < 3:
            raise ConfigurationError(f"--grid needs at least 3 points, got {self.grid_points}")
        if self.output_format not in FORMATS:
            raise ConfigurationError(
                f"--format must be one of {', '.join(FORMATS)}, got {self.output_format!r}")
        if self.smoothing not in SMOOTHINGS:
            raise ConfigurationError(
                f"--smoothing must be one of {', '.join(SMOOTHINGS)}, got {self.smoothing!r}")
        unknown = set(self.detectors) - set(DETECTORS)
        if unknown:
            raise ConfigurationError(
                f"unknown detectors {sorted(unknown)}; choose from {', '.join(DETECTORS)}")
        if self.command == "snapshot" and not self.times:
            raise ConfigurationError("snapshot needs at least one --time or --time-real")
        if self.command == "timetrace" and (not self.xi_points or self.samples < 2):
            raise ConfigurationError("timetrace needs --xi and at least 2 samples")
        if self.command == "scan" and (self.divisor < 1 or not self.sweep):
            raise ConfigurationError("scan needs a positive --divisor and a non-empty sweep")
        for lam in self.sweep + self.verify_lambdas:
            if not math.isfinite(lam) or lam <= 1.0:
                raise ConfigurationError(f"swept lambda {lam} must exceed 1")
        if self.threads < 0:
            raise ConfigurationError(f"threads must be >= 0, got {self.threads}")
        return self


def _parse_list(text: Optional[str], kind=float) -> Optional[Tuple]:
    if text is None:
        return None
    try:
        return tuple(kind(item) for item in text.split(",") if item.strip())
    except ValueError as e:
        raise ConfigurationError(f"cannot parse list {text!r}: {e}") from e


def build_run_config(args: argparse.Namespace, config_manager: ConfigManager) -> RunConfig:
    """
    Merge parsed flags over the stored settings and validate the result

    Args:
        args: Namespace produced by the argument parser
        config_manager: Initialized settings

    Returns:
        RunConfig: validated configuration

    Raises:
        ConfigurationError: for invalid values
    """
    def pick(name, key):
        value = getattr(args, name, None)
        return config_manager.get_setting(key) if value is None else value

    try:
        times = tuple(as_time(t) for t in (getattr(args, "time", None) or ()))
        times += tuple(as_time(float(t)) for t in (getattr(args, "time_real", None) or ()))
    except (WellEchoError, ValueError) as e:
        raise ConfigurationError(f"--time: {e}") from e

    detectors = frozenset(_parse_list(getattr(args, "detect", None), str) or ())
    sweep = _parse_list(getattr(args, "sweep", None)) or tuple(config_manager.get_setting("scan.sweep", ()))
    verify = _parse_list(getattr(args, "lambdas", None)) or tuple(
        config_manager.get_setting("verify.lambdas", ()))
    out = getattr(args, "out", None)

    run_config = RunConfig(
        command=args.command,
        lam=str(pick("lam", "model.lambda")),
        times=times,
        grid_points=int(pick("grid", "grid.points")),
        epsilon=float(pick("epsilon", "series.epsilon")),
        output_format=str(pick("format", "output.format")),
        output_path=Path(out) if out else None,
        output_directory=Path(config_manager.get_setting("output.directory", "output")),
        detectors=frozenset(d.strip() for d in detectors),
        smoothing=getattr(args, "smoothing", None) or "none",
        include_current=bool(getattr(args, "current", False)),
        xi_points=_parse_list(getattr(args, "xi", None)) or (),
        samples=int(pick("samples", "timetrace.samples")),
        mirror_xi=getattr(args, "mirror_xi", None),
        expectations=bool(getattr(args, "expectations", False)),
        divisor=int(pick("divisor", "scan.divisor")),
        sweep=tuple(float(x) for x in sweep),
        verify_lambdas=tuple(float(x) for x in verify),
        verify_epsilon=float(pick("verify_epsilon", "verify.epsilon")),
        plateau_min_width=float(config_manager.get_setting("analysis.plateau_min_width", 0.05)),
        cusp_kappa=float(config_manager.get_setting("analysis.cusp_kappa", 20.0)),
        zero_tolerance=float(config_manager.get_setting("analysis.zero_tolerance", 1e-8)),
        threads=int(config_manager.get_setting("threads", 0)),
        save_config=bool(getattr(args, "save_config", False)),
    )
    logger.debug("Run configuration: %s", run_config)
    return run_config.validate()
