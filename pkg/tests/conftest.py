import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "scripts"))

from hdldebug.cli import shipped_seed_dir  # noqa: E402
from hdldebug.minihdl import OPS, generate_dataset, load_seed_dir  # noqa: E402

FIXTURES = ROOT / "tests" / "fixtures"

CLEAN = """module top (input a, input b, output y);
    wire t;
    clock clk;
    probe p;
    init p = 3;
    assign t = a & b;
    assign y = t | a;
    pulse clk;
endmodule
"""


@pytest.fixture(scope="session")
def seeds():
    return load_seed_dir(shipped_seed_dir())


@pytest.fixture(scope="session")
def dataset(seeds):
    return generate_dataset(seeds, 1, list(OPS.values()), 1)


@pytest.fixture
def clean_source():
    return CLEAN
