import csv
import logging

import pytest

from app.physics.model import RationalTime, make_grid, make_model
from app.physics.spectral import build_spectral_set
from app.util.parallel import configure_workers
from app.well_echo_app import WellEchoApp

QUARTER = RationalTime(1, 4)
EIGHTH = RationalTime(1, 8)
HALF = RationalTime(1, 2)

# Header values that stay strings when a CSV header is read back
STRING_KEYS = {"tool", "version", "lambda", "time", "smoothing"}
# Table columns that are read back as text
TEXT_COLUMNS = {"flag", "complete", "time"}


def _coerce(key, text):
    if key in STRING_KEYS:
        return text
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    return text


def read_csv_export(path):
    """Header values with numbers parsed back, and every column as a list"""
    header = {}
    body = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        for line in f:
            if line.startswith("# "):
                key, _, text = line[2:].rstrip("\n").partition("=")
                header[key] = _coerce(key, text)
            else:
                body.append(line)
    reader = csv.reader(body)
    names = next(reader)
    columns = {name: [] for name in names}
    for row in reader:
        for name, cell in zip(names, row):
            if name in TEXT_COLUMNS:
                columns[name].append(cell)
            else:
                columns[name].append(float(cell) if cell != "" else None)
    return header, columns


@pytest.fixture
def model_3_2():
    return make_model("3/2")


@pytest.fixture
def grid_3_2(model_3_2):
    return make_grid(model_3_2, 4096)


@pytest.fixture(scope="session")
def spectral_3_2():
    return build_spectral_set(make_model("3/2"), 1e-6)


@pytest.fixture(autouse=True)
def _reset_workers():
    yield
    configure_workers(None)


@pytest.fixture
def run_cli(tmp_path, monkeypatch):
    """Run the application in tmp_path and return its exit code"""
    monkeypatch.chdir(tmp_path)

    def run(*argv):
        app = WellEchoApp(str(tmp_path / "settings.json"))
        app.initialize()
        try:
            return app.run(list(argv))
        finally:
            app.exit()

    logging.getLogger("app").setLevel(logging.DEBUG)
    return run
