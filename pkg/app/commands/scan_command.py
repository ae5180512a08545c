"""
ScanCommand - Peak-count atlas over lambda and tau = p/M, with a threshold estimate
"""

import logging
from itertools import product

from app.analysis.structure_analysis import (conjecture_scan, expected_peak_count,
                                             threshold_from_reports)
from app.commands.command_manager import EXIT_OK, Command
from app.physics.model import make_model, reduce_time
from app.util.exporters import (derive_path, make_header, write_table_csv, write_table_json,
                                write_table_svg)
from app.util.parallel import parallel_map

logger = logging.getLogger(__name__)

SCAN_COLUMNS = ("lambda", "divisor", "p", "time", "peak_count", "expected", "complete",
                "max_shape_distance")


class ScanCommand(Command):
    """
    Counts density peaks for every swept lambda at tau = p/M, p = 1..M

    Mismatches with the predicted counts above threshold are logged as
    diagnostics; they do not fail the run.
    """

    def initialize(self, run_config, config_manager):
        super().initialize(run_config, config_manager)
        self.rows = []
        self.threshold = None
        self.written = []

    def run(self):
        cfg = self.run_config
        divisor = cfg.divisor
        sweep = sorted(cfg.sweep)
        cases = list(product(sweep, range(1, divisor + 1)))
        logger.info("Scanning %d lambda value(s) at tau = p/%d", len(sweep), divisor)

        def scan(case):
            lam, p = case
            return conjecture_scan(make_model(lam), divisor, p, cfg.epsilon, cfg.grid_points,
                                   cfg.zero_tolerance)

        first_time = []
        for (lam, p), report in zip(cases, parallel_map(scan, cases)):
            if p == 1:
                first_time.append((lam, report))
            self.rows.append([float(lam), divisor, p, str(reduce_time(p, divisor)),
                              report.peak_count, expected_peak_count(p, divisor),
                              report.complete(), float(report.max_shape_distance)])

        estimate = threshold_from_reports(first_time, divisor, 1)
        self.threshold = estimate.threshold
        if self.threshold is None:
            logger.warning("No complete fragmentation at tau=1/%d up to lambda=%s", divisor,
                           sweep[-1])
        else:
            predicted = divisor / 2 if divisor % 2 == 0 else divisor
            logger.info("Threshold estimate lambda_c(%d) = %s (predicted %s)", divisor,
                        self.threshold, predicted)

        self._write()
        return EXIT_OK

    def _write(self):
        cfg = self.run_config
        header = make_header(make_model(cfg.sweep[0]), f"p/{cfg.divisor}", 0, 0.0, cfg.epsilon,
                             cfg.grid_points, sweep=",".join(repr(x) for x in sorted(cfg.sweep)),
                             threshold="" if self.threshold is None else repr(self.threshold))
        header["lambda"] = "sweep"
        path = derive_path(cfg.output_path, cfg.output_directory, f"scan_M-{cfg.divisor}",
                           cfg.output_format)
        if cfg.output_format == "json":
            self.written.append(write_table_json(path, header, SCAN_COLUMNS, self.rows,
                                                 threshold=self.threshold))
        elif cfg.output_format == "svg":
            lambdas = sorted(cfg.sweep)
            series = []
            for p in range(1, cfg.divisor + 1):
                counts = [row[4] for row in self.rows if row[2] == p]
                series.append((f"p={p}", counts))
            self.written.append(write_table_svg(path, header, lambdas, "lambda", series))
        else:
            self.written.append(write_table_csv(path, header, SCAN_COLUMNS, self.rows))
