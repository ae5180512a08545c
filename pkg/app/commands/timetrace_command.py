"""
TimetraceCommand - Density and current at fixed positions over one revival period
"""

import logging

import numpy as np

from app.analysis.expectation_values import expectations, minimum_product, rest_epochs
from app.commands.command_manager import EXIT_OK, Command
from app.physics.evolution import SeriesEvaluator
from app.physics.model import grid_from_points, make_grid
from app.physics.spectral import build_spectral_set
from app.util.exporters import (derive_path, lambda_label, make_header, with_suffix_tag,
                                write_table_csv, write_table_json, write_table_svg)
from app.util.parallel import parallel_map

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ("tau", "density", "current", "density_reflected", "current_reflected")
EXPECTATION_COLUMNS = ("tau", "mean_xi", "mean_p", "delta_xi", "delta_p", "product")


def trace_times(samples: int) -> np.ndarray:
    """Uniform tau samples covering [0, 1]"""
    return np.linspace(0.0, 1.0, samples)


class TimetraceCommand(Command):
    """
    Samples a*rho and the reduced current at each --xi for tau in [0, 1]

    The reflected columns hold the same quantities at 1 - tau, and the
    optional mirror column the current at --mirror-xi and tau' = 1/2 - tau.
    """

    def initialize(self, run_config, config_manager):
        super().initialize(run_config, config_manager)
        self.model = run_config.model()
        self.written = []

    def run(self):
        cfg = self.run_config
        spectral_set = build_spectral_set(self.model, cfg.epsilon)
        positions = sorted(set(cfg.xi_points + ((cfg.mirror_xi,) if cfg.mirror_xi is not None else ())))
        grid = grid_from_points(self.model, positions)
        evaluator = SeriesEvaluator(spectral_set)
        taus = trace_times(cfg.samples)
        logger.info("Time trace of %s at xi=%s over %d samples (n_max=%d)", self.model,
                    list(cfg.xi_points), len(taus), spectral_set.n_max)

        def sample(tau: float):
            psi, dpsi = evaluator.evaluate(grid, float(tau), gradient=True, smoothing=cfg.smoothing)
            return np.abs(psi) ** 2, np.imag(np.conj(psi) * dpsi) / np.pi

        forward = parallel_map(sample, taus)
        backward = parallel_map(sample, 1.0 - taus)
        mirrored = parallel_map(sample, np.mod(0.5 - taus, 1.0)) if cfg.mirror_xi is not None else None

        header = make_header(self.model, "0..1", spectral_set.n_max, spectral_set.tail_bound,
                             cfg.epsilon, len(positions), samples=cfg.samples,
                             smoothing=cfg.smoothing)
        stem = f"timetrace_lambda-{lambda_label(self.model).replace('/', '-')}"
        base = derive_path(cfg.output_path, cfg.output_directory, stem, cfg.output_format)

        columns = TRACE_COLUMNS + (("current_mirror",) if mirrored is not None else ())
        for xi in cfg.xi_points:
            k = positions.index(xi)
            rows = []
            for i, tau in enumerate(taus):
                row = [float(tau), float(forward[i][0][k]), float(forward[i][1][k]),
                       float(backward[i][0][k]), float(backward[i][1][k])]
                if mirrored is not None:
                    row.append(float(mirrored[i][1][positions.index(cfg.mirror_xi)]))
                rows.append(row)
            path = base if len(cfg.xi_points) == 1 else with_suffix_tag(base, _xi_tag(xi))
            extra = {"xi": float(xi)}
            if mirrored is not None:
                extra["mirror_xi"] = float(cfg.mirror_xi)
            self._write_table(path, dict(header, **extra), columns, rows)

        if cfg.expectations:
            self._write_expectations(spectral_set, taus, header, base)
        return EXIT_OK

    def _write_expectations(self, spectral_set, taus, header, base):
        cfg = self.run_config
        trace = expectations(spectral_set, list(taus), cfg.grid_points, "sigma")
        epochs = rest_epochs(trace)
        logger.info("Minimum uncertainty product %.6f hbar, %d rest epoch(s)",
                    minimum_product(trace), len(epochs))
        grid_points = len(make_grid(self.model, cfg.grid_points))
        self._write_table(with_suffix_tag(base, "expectations"),
                          dict(header, grid_points=grid_points), EXPECTATION_COLUMNS,
                          trace.rows(), rest_epochs=epochs,
                          minimum_product=minimum_product(trace))

    def _write_table(self, path, header, columns, rows, **sections):
        fmt = self.run_config.output_format
        if fmt == "json":
            self.written.append(write_table_json(path, header, columns, rows, **sections))
        elif fmt == "svg":
            x = [row[0] for row in rows]
            series = [(name, [row[c] for row in rows]) for c, name in enumerate(columns) if c > 0]
            self.written.append(write_table_svg(path, header, x, "tau = t / T", series))
        else:
            self.written.append(write_table_csv(path, header, columns, rows))


def _xi_tag(xi: float) -> str:
    return "xi-" + repr(float(xi)).replace(".", "p")
