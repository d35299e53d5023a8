from __future__ import annotations

import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from curvespn.config import Config
from curvespn.dataset import SyntheticSpec, generate_chart

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    ok, prev = ACCEPTANCE.get(criterion, (True, ""))
    ACCEPTANCE[criterion] = (ok and passed, f"{prev}; {detail}" if prev else detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def two_curve_chart(tmp_path_factory):
    """A solid linear + sinusoidal chart written to disk with its sidecar."""
    out = tmp_path_factory.mktemp("chart2")
    spec = SyntheticSpec(kinds=["linear", "sinusoidal"], colors=[(255, 0, 0), (0, 0, 255)],
                         widths=[2, 3], dashes=["solid", "solid"], seed=11)
    chart = generate_chart(spec, out, stem="c")
    return {"dir": out, "png": out / "c.png", "axis": out / "c.axis.json", "chart": chart}


@pytest.fixture(scope="session")
def two_curve_desc(two_curve_chart):
    from curvespn.pipeline import analyze

    return analyze(two_curve_chart["png"], two_curve_chart["axis"], Config())


def blank(h: int = 100, w: int = 120) -> np.ndarray:
    return np.full((h, w, 3), 255, dtype=np.uint8)
