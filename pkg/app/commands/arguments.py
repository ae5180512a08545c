"""
Command-line parser shared by main.py and the tests
"""

import argparse

from app.config.run_config import FORMATS, SMOOTHINGS
from app.util.exporters import TOOL_NAME, TOOL_VERSION


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--lambda", dest="lam", help="expansion factor, e.g. 3/2 or 2.5")
    parser.add_argument("--grid", type=int, help="number of grid points")
    parser.add_argument("--epsilon", type=float, help="series truncation tolerance")
    parser.add_argument("--format", choices=FORMATS, help="output format")
    parser.add_argument("--out", help="output file (derived from settings when omitted)")
    parser.add_argument("--smoothing", choices=SMOOTHINGS,
                        help="smoothing of the derivative series used for currents")
    parser.add_argument("--verbose", action="store_true", help="log numerical diagnostics")
    parser.add_argument("--save-config", dest="save_config", action="store_true",
                        help="store lambda, grid, epsilon and format in the settings file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=TOOL_NAME,
        description="Spectral simulation of a particle in a suddenly expanded infinite well")
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {TOOL_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    snapshot = sub.add_parser("snapshot", help="density profiles at fixed times")
    _common(snapshot)
    snapshot.add_argument("--time", action="append", help="rational time p/q in periods T")
    snapshot.add_argument("--time-real", dest="time_real", action="append", type=float,
                          help="real time in periods T")
    snapshot.add_argument("--detect", help="comma list of plateaux,cusps,fragments")
    snapshot.add_argument("--current", action="store_true", help="also export the current")

    timetrace = sub.add_parser("timetrace", help="density and current over time at fixed xi")
    _common(timetrace)
    timetrace.add_argument("--xi", help="comma list of positions in units of a")
    timetrace.add_argument("--samples", type=int, help="number of tau samples over [0, 1]")
    timetrace.add_argument("--mirror-xi", dest="mirror_xi", type=float,
                           help="position of the current compared at T/2 - t")
    timetrace.add_argument("--expectations", action="store_true",
                           help="also export position and momentum expectation values")

    verify = sub.add_parser("verify", help="run the numerical acceptance checks")
    _common(verify)
    verify.add_argument("--lambdas", help="comma list of lambdas to verify")
    verify.add_argument("--verify-epsilon", dest="verify_epsilon", type=float,
                        help="truncation tolerance of the checks")

    scan = sub.add_parser("scan", help="peak counts over lambda at tau = p/M")
    _common(scan)
    scan.add_argument("--divisor", type=int, help="M")
    scan.add_argument("--sweep", help="comma list of lambdas")
    return parser
