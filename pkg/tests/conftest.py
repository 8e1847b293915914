import math

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None)
settings.load_profile("default")

from engagement.model import ModelParams


@pytest.fixture
def baseline() -> ModelParams:
    return ModelParams(p=0.5, v=1.0, c_h=0.0, c_n=-0.25, t_a_bar=1.0, u0=3.0)


def fig3(p: float) -> ModelParams:
    # v, c_h, c_n chosen so delta = 3.0 as in both value-function plots
    return ModelParams(p=p, v=1.0, c_h=0.0, c_n=-0.11, t_a_bar=3.0, u0=10.0)


@st.composite
def valid_params(draw, allow_zero_p: bool = True) -> ModelParams:
    p = draw(st.one_of(st.just(0.0), st.floats(0.01, 0.95))) if allow_zero_p else draw(st.floats(0.01, 0.95))
    v = draw(st.floats(0.2, 4.0))
    c_h = -v * draw(st.one_of(st.just(0.0), st.floats(0.0, 0.9)))
    c_n = -draw(st.floats(1e-3, 3.0))
    t_a_bar = draw(st.floats(0.05, 5.0))
    u0 = draw(st.floats(0.0, 10.0))
    return ModelParams(p=p, v=v, c_h=c_h, c_n=c_n, t_a_bar=t_a_bar, u0=u0)


def random_suite(n: int, seed: int = 2026) -> list[ModelParams]:
    """Valid configurations covering p = 0, c_h < 0, trivial draws and both Fig. 3 settings."""
    rng = np.random.default_rng(seed)
    suite = [fig3(0.60), fig3(0.85), ModelParams(0.5, 1.0, 0.0, -0.25, 1.0, 3.0)]
    suite.append(ModelParams(0.0, 1.0, 0.0, -0.3, 1.0, 4.0))
    suite.append(ModelParams(0.9, 1.0, 0.0, -1.0, 1.0, 3.0))  # trivial
    suite.append(ModelParams(0.4, 2.0, -0.5, -0.05, 0.7, 6.0))  # c_h < 0, k[omega] > 0
    while len(suite) < n:
        p = 0.0 if rng.random() < 0.1 else float(rng.uniform(0.01, 0.95))
        v = float(rng.uniform(0.2, 3.0))
        c_h = -v * float(rng.uniform(0.0, 0.9)) if rng.random() < 0.5 else 0.0
        c_n = -float(rng.uniform(0.001, 3.0) * 10 ** rng.uniform(-2, 0))
        suite.append(ModelParams(p, v, c_h, c_n, float(rng.uniform(0.05, 5.0)), float(rng.uniform(0.5, 10.0))))
    return suite


def is_trivial(params: ModelParams) -> bool:
    return 1.0 + params.p * params.c_n / ((1.0 - params.p) * (params.v + params.c_h)) <= 0.0


assert math.isclose(fig3(0.6).t_a_bar * fig3(0.6).v, 3.0)


ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
