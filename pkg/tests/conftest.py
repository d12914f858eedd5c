import numpy as np
import pytest

from bangbang import ControlPartition, ProblemSpec, Sinusoid, alternating_control


@pytest.fixture
def switch_spec():
    """Alternating control on ten unit intervals; the closed form is known."""
    return ProblemSpec(K=1.0, C=3.0, T_s=50.0, T_0=70.0, t_final=10.0,
                       partition=ControlPartition.equal(10.0, 10))


@pytest.fixture
def tracking_spec():
    """100 intervals tracking 5 + 0.5 sin(t)."""
    return ProblemSpec(K=0.1, C=2.0, T_s=0.0, T_0=10.0, t_final=100.0,
                       partition=ControlPartition.equal(100.0, 100),
                       target=Sinusoid(5.0, 0.5, 1.0))


@pytest.fixture
def alternating10():
    return alternating_control(10)


def small_spec(n=4, t_final=4.0, **kw):
    args = dict(K=0.5, C=2.0, T_s=1.0, T_0=3.0, t_final=t_final,
                partition=ControlPartition.equal(t_final, n))
    args.update(kw)
    return ProblemSpec(**args)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS.values():
            terminalreporter.write_line(line)
