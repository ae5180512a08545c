"""
Exporters - CSV, JSON and SVG files written by the commands

Every file starts with the same reproducibility header. Floats are written with
repr so that CSV and JSON files of one run hold identical values.
"""

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from app.physics.model import (REDUCED_UNITS, RationalTime, TimeLike, WellModel,  # noqa: E402
                               format_time)

logger = logging.getLogger(__name__)

TOOL_NAME = "well-echo"
TOOL_VERSION = "1.0.0"

PROFILE_COLUMNS = ("xi", "density", "current", "flag")


def lambda_label(model: WellModel) -> str:
    return str(model.fraction) if model.fraction is not None else repr(model.lam)


def make_header(model: WellModel, time: str, n_max: int, error_bound: float,
                epsilon: float, grid_points: int, **extra) -> Dict[str, object]:
    """
    Build the reproducibility header shared by every output file

    Args:
        model: Expanded well
        time: Exact "p/q" or repr of a real tau, or a label for multi-time files
        n_max: Series cutoff
        error_bound: Certified truncation bound of the wavefunction
        epsilon: Requested truncation tolerance
        grid_points: Spatial grid size
        **extra: Command specific entries appended after the common ones
    """
    header = {
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "lambda": lambda_label(model),
        "time": time,
        "n_max": int(n_max),
        "error_bound": float(error_bound),
        "epsilon": float(epsilon),
        "grid_points": int(grid_points),
        "period_t1": REDUCED_UNITS.t1_from_tau(1.0, model.lam),
    }
    header.update(extra)
    return header


def time_suffix(tau: TimeLike) -> str:
    """File-name safe rendering of a time, e.g. tau-1-4"""
    if isinstance(tau, RationalTime):
        return f"tau-{tau.p}-{tau.q}"
    return "tau-" + format_time(tau).replace(".", "p").replace("-", "m")


def derive_path(out: Optional[Path], directory: Path, stem: str, output_format: str) -> Path:
    """The requested path, or directory/stem.format when none was given"""
    path = Path(out) if out is not None else Path(directory) / f"{stem}.{output_format}"
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def with_suffix_tag(path: Path, tag: str) -> Path:
    return path.with_name(f"{path.stem}_{tag}{path.suffix}")


@dataclass
class ProfileRecord:
    """
    One snapshot profile ready for export

    Attributes:
        time: Time label
        xi: Grid points
        density: a*rho samples
        current: Reduced current samples, or None when not requested
        flags: Per-point membership of detected plateaux and cusps
        reports: Detector reports keyed by detector name
    """
    time: str
    xi: np.ndarray
    density: np.ndarray
    current: Optional[np.ndarray] = None
    flags: Optional[List[str]] = None
    reports: Dict[str, object] = field(default_factory=dict)

    def flag_column(self) -> List[str]:
        return list(self.flags) if self.flags is not None else [""] * len(self.xi)

    def as_dict(self) -> dict:
        return {
            "time": self.time,
            "xi": np.asarray(self.xi, dtype=float).tolist(),
            "density": np.asarray(self.density, dtype=float).tolist(),
            "current": None if self.current is None
            else np.asarray(self.current, dtype=float).tolist(),
            "flag": self.flag_column(),
            "reports": self.reports,
        }


def _float(value) -> str:
    return repr(float(value))


def _header_lines(header: Dict[str, object]) -> List[str]:
    lines = []
    for key, value in header.items():
        text = _float(value) if isinstance(value, float) else str(value)
        lines.append(f"# {key}={text}\n")
    return lines


def write_profile_csv(path: Path, header: Dict[str, object], record: ProfileRecord) -> Path:
    """Write one profile as header comments followed by xi,density,current,flag rows"""
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.writelines(_header_lines(dict(header, time=record.time)))
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(PROFILE_COLUMNS)
        current = record.current
        for i, (x, rho, flag) in enumerate(zip(record.xi, record.density, record.flag_column())):
            writer.writerow([_float(x), _float(rho),
                             "" if current is None else _float(current[i]), flag])
    logger.info("Wrote %s", path)
    return path


def write_profiles_json(path: Path, header: Dict[str, object],
                        records: Sequence[ProfileRecord]) -> Path:
    """Write every profile of a run into one JSON document"""
    document = {"header": header, "profiles": [record.as_dict() for record in records]}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=1)
    logger.info("Wrote %s", path)
    return path


def write_table_csv(path: Path, header: Dict[str, object], columns: Sequence[str],
                    rows: Sequence[Sequence[object]]) -> Path:
    """Write a generic table (time traces, scans) with the reproducibility header"""
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.writelines(_header_lines(header))
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    logger.info("Wrote %s", path)
    return path


def write_table_json(path: Path, header: Dict[str, object], columns: Sequence[str],
                     rows: Sequence[Sequence[object]], **sections) -> Path:
    def plain(value):
        if isinstance(value, np.generic):
            return value.item()
        return value

    document = {"header": header, "columns": list(columns),
                "rows": [[plain(v) for v in row] for row in rows]}
    document.update(sections)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=1)
    logger.info("Wrote %s", path)
    return path


def _title(header: Dict[str, object]) -> str:
    return f"{header['tool']} {header['version']}  lambda={header['lambda']}  time={header['time']}"


def _save_svg(fig, path: Path, header: Dict[str, object]):
    fig.savefig(path, format="svg", bbox_inches="tight",
                metadata={"Title": _title(header), "Description": json.dumps(header)})
    plt.close(fig)
    logger.info("Wrote %s", path)


def write_profiles_svg(path: Path, header: Dict[str, object],
                       records: Sequence[ProfileRecord]) -> Path:
    """Line plot of every density (and current, when present) against xi"""
    with_current = any(record.current is not None for record in records)
    rows = 2 if with_current else 1
    fig, axes = plt.subplots(rows, 1, figsize=(8, 4 * rows), sharex=True, squeeze=False)
    density_ax = axes[0][0]
    for record in records:
        density_ax.plot(record.xi, record.density, linewidth=1.2, label=f"tau={record.time}")
    density_ax.set_ylabel(REDUCED_UNITS.density)
    density_ax.set_title(_title(header), fontsize=9)
    density_ax.legend(fontsize=8)
    density_ax.grid(True, alpha=0.3)
    if with_current:
        current_ax = axes[1][0]
        for record in records:
            if record.current is not None:
                current_ax.plot(record.xi, record.current, linewidth=1.0,
                                label=f"tau={record.time}")
        current_ax.set_ylabel(REDUCED_UNITS.current)
        current_ax.legend(fontsize=8)
        current_ax.grid(True, alpha=0.3)
    axes[-1][0].set_xlabel(f"xi = x / {REDUCED_UNITS.length}")
    _save_svg(fig, path, header)
    return path


def write_table_svg(path: Path, header: Dict[str, object], x: Sequence[float], x_label: str,
                    series: Sequence[Tuple[str, Sequence[float]]]) -> Path:
    """Line plot of several columns of a table against one column"""
    fig, ax = plt.subplots(figsize=(8, 4))
    for label, values in series:
        ax.plot(x, values, linewidth=1.0, label=label)
    ax.set_xlabel(x_label)
    ax.set_title(_title(header), fontsize=9)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    _save_svg(fig, path, header)
    return path
