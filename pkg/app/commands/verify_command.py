"""
VerifyCommand - Runs the numerical acceptance checks and writes a JSON report

The exit code is 0 when every check passes and 1 otherwise.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List

from app.analysis.structure_analysis import compare
from app.commands.command_manager import EXIT_CHECK_FAILED, EXIT_OK, Command
from app.physics.closedform import closed_form_for_time, current_quarter, sample_density
from app.physics.evolution import check_symmetries, current, density, evaluate_wavefunction
from app.physics.model import RationalTime, make_grid, make_model
from app.physics.momentum import darboux_check, momentum_norm, position_expectation
from app.physics.spectral import (build_spectral_set, mean_energy, measurement_distribution,
                                  norm_and_energy_via_g)
from app.util.exporters import TOOL_NAME, TOOL_VERSION, derive_path
from app.util.parallel import parallel_map

logger = logging.getLogger(__name__)

ORACLE_TIMES = (RationalTime(1, 2), RationalTime(1, 4), RationalTime(1, 8))
SYMMETRY_TIMES = (RationalTime(1, 8), RationalTime(1, 4), 0.137)
MEASUREMENT_LEVELS = (2, 3, 5)
DARBOUX_POINTS = ((0.5, 0.1), (1.5, 0.2))
SYMMETRY_GRID_POINTS = 1024

SUM_RULE_TOLERANCE = 1e-10
ENERGY_TOLERANCE = 1e-6
MEASUREMENT_TOLERANCE = 1e-10
CURRENT_TOLERANCE = 1e-3
CURRENT_MARGIN = 0.05
MOMENTUM_TOLERANCE = 1e-5
POSITION_TOLERANCE = 1e-3


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: Dict[str, object] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, **self.details}


def check_sum_rules(lam: float, epsilon: float) -> List[CheckResult]:
    """Norm and energy through G, and the series mean energy with its analytic tail"""
    model = make_model(lam)
    results = []
    if model.is_integer:
        results.append(CheckResult(f"sum_rule[lambda={lam}]", True,
                                   {"skipped": "G sum rule is singular at integer lambda"}))
    else:
        norm, energy = norm_and_energy_via_g(lam)
        passed = abs(norm - 1.0) <= SUM_RULE_TOLERANCE and abs(energy - 1.0) <= SUM_RULE_TOLERANCE
        results.append(CheckResult(f"sum_rule[lambda={lam}]", passed,
                                   {"norm": norm, "energy": energy}))
    energy = mean_energy(build_spectral_set(model, epsilon))
    results.append(CheckResult(f"mean_energy[lambda={lam}]", abs(energy - 1.0) <= ENERGY_TOLERANCE,
                               {"mean_energy": energy}))
    return results


def check_measurement(level: int) -> CheckResult:
    """At lambda = n0 the n0-th level is measured with probability 1/n0"""
    distribution = measurement_distribution(make_model(level), level)
    p = float(distribution.probabilities[level - 1])
    return CheckResult(f"measurement[lambda={level}]",
                       abs(p - 1.0 / level) <= MEASUREMENT_TOLERANCE, {"probability": p})


def check_oracles(lam: float, epsilon: float, grid_points: int) -> List[CheckResult]:
    """Series density against the closed forms at T/2, T/4 and T/8"""
    model = make_model(lam)
    spectral_set = build_spectral_set(model, epsilon)
    grid = make_grid(model, grid_points)
    results = []
    for tau in ORACLE_TIMES:
        series = density(evaluate_wavefunction(spectral_set, grid, tau))
        closed = sample_density(closed_form_for_time(model, tau), grid, tau)
        report = compare(series, closed)
        results.append(CheckResult(f"oracle[lambda={lam}, tau={tau}]", report.passed,
                                   report.as_dict()))
    return results


def check_quarter_current(lam: float, epsilon: float, grid_points: int) -> CheckResult:
    """Interval medians of the series current against the piecewise-constant closed form"""
    model = make_model(lam)
    tau = RationalTime(1, 4)
    series = current(build_spectral_set(model, epsilon), make_grid(model, grid_points), tau)
    exact = current_quarter(model)
    worst = 0.0
    for lo, hi in exact.intervals:
        if hi - lo <= 2.0 * CURRENT_MARGIN:
            continue
        expected = float(exact.evaluate(0.5 * (lo + hi))[0])
        worst = max(worst, abs(series.interval_median(lo + CURRENT_MARGIN, hi - CURRENT_MARGIN)
                               - expected))
    return CheckResult(f"current_quarter[lambda={lam}]", worst <= CURRENT_TOLERANCE,
                       {"max_median_deviation": worst})


def check_symmetry(lam: float, epsilon: float) -> List[CheckResult]:
    model = make_model(lam)
    spectral_set = build_spectral_set(model, epsilon)
    grid = make_grid(model, SYMMETRY_GRID_POINTS)
    results = []
    for tau in SYMMETRY_TIMES:
        report = check_symmetries(spectral_set, grid, tau)
        results.append(CheckResult(f"symmetry[lambda={lam}, tau={tau}]", report.passed,
                                   {"deviations": report.deviations, "bound": report.bound}))
    return results


def check_momentum() -> List[CheckResult]:
    """Norms and mean positions of the true and naive momentum amplitudes"""
    true_norm = momentum_norm("true_initial")
    naive_norm = momentum_norm("naive_limit")
    true_position = position_expectation("true_initial")
    naive_position = position_expectation("naive_limit")
    return [
        CheckResult("momentum_norm[true_initial]", abs(true_norm - 1.0) <= MOMENTUM_TOLERANCE,
                    {"norm": true_norm}),
        CheckResult("momentum_norm[naive_limit]", abs(naive_norm - 2.0) <= MOMENTUM_TOLERANCE,
                    {"norm": naive_norm}),
        CheckResult("position[true_initial]", abs(true_position - 0.5) <= POSITION_TOLERANCE,
                    {"mean_xi": true_position}),
        CheckResult("position[naive_limit]", abs(naive_position) <= POSITION_TOLERANCE,
                    {"mean_xi": naive_position}),
    ]


def check_darboux() -> List[CheckResult]:
    results = []
    for x, t in DARBOUX_POINTS:
        result = darboux_check(x, t)
        results.append(CheckResult(f"darboux[x={x}, t={t}]", result.passed,
                                   {"deviation": result.deviation,
                                    "tolerance": result.tolerance}))
    return results


class VerifyCommand(Command):
    """
    Sum rules, oracle comparisons, symmetries, measurement probabilities,
    momentum norms and the half-line limit, for every configured lambda
    """

    def initialize(self, run_config, config_manager):
        super().initialize(run_config, config_manager)
        self.results: List[CheckResult] = []
        self.report_path = None

    def run(self):
        cfg = self.run_config
        eps = cfg.verify_epsilon
        lambdas = list(cfg.verify_lambdas)
        logger.info("Verifying lambda in %s at epsilon=%g", lambdas, eps)

        for lam in lambdas:
            self.results += check_sum_rules(lam, eps)
            self.results += check_oracles(lam, eps, cfg.grid_points)
            self.results.append(check_quarter_current(lam, eps, cfg.grid_points))
            self.results += check_symmetry(lam, eps)
        self.results += parallel_map(check_measurement, MEASUREMENT_LEVELS)
        self.results += check_momentum()
        self.results += check_darboux()

        failed = [r for r in self.results if not r.passed]
        for r in failed:
            logger.warning("Check failed: %s %s", r.name, r.details)
        logger.info("%d of %d checks passed", len(self.results) - len(failed), len(self.results))
        self._write(failed)
        return EXIT_CHECK_FAILED if failed else EXIT_OK

    def _write(self, failed):
        cfg = self.run_config
        path = derive_path(cfg.output_path, cfg.output_directory, "verify_report", "json")
        document = {
            "header": {"tool": TOOL_NAME, "version": TOOL_VERSION,
                       "lambdas": list(cfg.verify_lambdas), "epsilon": cfg.verify_epsilon,
                       "grid_points": cfg.grid_points},
            "passed": not failed,
            "failed": [r.name for r in failed],
            "checks": [r.as_dict() for r in self.results],
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(document, f, indent=1, default=_plain)
        self.report_path = path
        logger.info("Wrote %s", path)


def _plain(value):
    if hasattr(value, "item"):
        return value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    raise TypeError(f"cannot serialise {type(value).__name__}")
