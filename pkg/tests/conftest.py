import json
import pathlib

import pytest

from halfint.hecke import build_hecke_table
from halfint.qseries import delta_halfintegral, load_coeffs, save_coeffs

CACHE_DIR = pathlib.Path(__file__).resolve().parent.parent / ".cache"
BIG_N = 2_100_000
DATA_DIR = pathlib.Path(__file__).resolve().parent / "data"

# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def big_table():
    """Coefficient table to 2.1e6, cached on disk in the binary format (the
    cache round-trip itself exercises save/load at scale)."""
    CACHE_DIR.mkdir(exist_ok=True)
    path = CACHE_DIR / f"delta_{BIG_N}.hicf"
    if path.exists():
        try:
            table = load_coeffs(str(path))
            if table.N == BIG_N:
                return table
        except Exception:
            path.unlink()
    table = delta_halfintegral(BIG_N)
    save_coeffs(table, str(path))
    return table


@pytest.fixture(scope="session")
def table10k():
    return delta_halfintegral(10_000)


@pytest.fixture(scope="session")
def hecke26k():
    return build_hecke_table(26_000)


@pytest.fixture(scope="session")
def pins():
    with open(DATA_DIR / "regression_pins.json") as fh:
        return json.load(fh)
