"""
SnapshotCommand - Density (and current) profiles at fixed times, with detector reports
"""

import logging
from typing import Dict, List, Optional

import numpy as np

from app.analysis.structure_analysis import detect_cusps, detect_fragments, detect_plateaux
from app.commands.command_manager import EXIT_OK, Command
from app.physics.evolution import current, density, evaluate_wavefunction
from app.physics.model import format_time, make_grid
from app.physics.spectral import build_spectral_set
from app.util.exporters import (ProfileRecord, derive_path, lambda_label, make_header,
                                time_suffix, with_suffix_tag, write_profile_csv,
                                write_profiles_json, write_profiles_svg)

logger = logging.getLogger(__name__)


def membership_flags(points: np.ndarray, plateau_mask: Optional[np.ndarray],
                     cusp_mask: Optional[np.ndarray]) -> List[str]:
    """Per-point flag: "", "plateau", "cusp" or "plateau|cusp" """
    flags = []
    for i in range(len(points)):
        parts = []
        if plateau_mask is not None and plateau_mask[i]:
            parts.append("plateau")
        if cusp_mask is not None and cusp_mask[i]:
            parts.append("cusp")
        flags.append("|".join(parts))
    return flags


class SnapshotCommand(Command):
    """
    Computes a*rho on a lattice grid at every requested time
    """

    def initialize(self, run_config, config_manager):
        super().initialize(run_config, config_manager)
        self.model = run_config.model()
        self.records: List[ProfileRecord] = []
        self.written = []

    def run(self):
        cfg = self.run_config
        spectral_set = build_spectral_set(self.model, cfg.epsilon)
        grid = make_grid(self.model, cfg.grid_points)
        logger.info("Snapshot of %s at %d time(s): n_max=%d, %d grid points", self.model,
                    len(cfg.times), spectral_set.n_max, len(grid))

        for tau in cfg.times:
            wave = evaluate_wavefunction(spectral_set, grid, tau)
            profile = density(wave)
            reports: Dict[str, object] = {}
            plateau_mask = cusp_mask = None
            if "plateaux" in cfg.detectors:
                plateaux = detect_plateaux(profile, min_width=cfg.plateau_min_width)
                reports["plateaux"] = plateaux.as_dict()
                plateau_mask = plateaux.mask(grid.points)
            if "cusps" in cfg.detectors:
                cusps = detect_cusps(profile, cfg.cusp_kappa)
                reports["cusps"] = cusps.as_dict()
                cusp_mask = cusps.mask(grid.points)
            if "fragments" in cfg.detectors:
                reports["fragments"] = detect_fragments(profile, cfg.zero_tolerance).as_dict()
            reports["error_bound"] = profile.error_bound

            j = current(spectral_set, grid, tau, cfg.smoothing).values if cfg.include_current else None
            self.records.append(ProfileRecord(format_time(tau), grid.points, profile.values, j,
                                              membership_flags(grid.points, plateau_mask, cusp_mask),
                                              reports))

        self._write(spectral_set, len(grid))
        return EXIT_OK

    def _write(self, spectral_set, grid_points):
        cfg = self.run_config
        label = "+".join(record.time for record in self.records)
        header = make_header(self.model, label, spectral_set.n_max, spectral_set.tail_bound,
                             cfg.epsilon, grid_points, smoothing=cfg.smoothing)
        stem = f"snapshot_lambda-{lambda_label(self.model).replace('/', '-')}"
        path = derive_path(cfg.output_path, cfg.output_directory, stem, cfg.output_format)

        if cfg.output_format == "json":
            self.written.append(write_profiles_json(path, header, self.records))
        elif cfg.output_format == "svg":
            self.written.append(write_profiles_svg(path, header, self.records))
        else:
            for tau, record in zip(cfg.times, self.records):
                target = path if len(self.records) == 1 else with_suffix_tag(path, time_suffix(tau))
                self.written.append(write_profile_csv(target, header, record))

    def cleanup(self):
        self.records = []
