import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bangbang import (
    ConfigurationError,
    Constant,
    ControlPartition,
    PerIntervalConstant,
    ProblemSpec,
    Sinusoid,
    Tabulated,
    alternating_control,
    control_jump,
    control_value,
    field_jump,
)
from bangbang.problem import check_control, check_relaxed


class TestControlValue:
    def test_inside_first_interval(self):
        part = ControlPartition.equal(10.0, 10)
        assert control_value(alternating_control(10), part, 0.5) == 1.0

    def test_inside_second_interval(self):
        part = ControlPartition.equal(10.0, 10)
        assert control_value(alternating_control(10), part, 1.5) == 0.0

    def test_zero_control(self):
        part = ControlPartition.equal(10.0, 10)
        for t in (0.0, 3.3, 7.0, 10.0):
            assert control_value(np.zeros(10), part, t) == 0.0

    def test_breakpoint_uses_left_interval(self):
        part = ControlPartition.equal(10.0, 10)
        assert control_value(alternating_control(10), part, 1.0) == 1.0
        assert control_value(alternating_control(10), part, 2.0) == 0.0

    @pytest.mark.parametrize("t", [-0.1, 10.5])
    def test_outside_horizon(self, t):
        with pytest.raises(ValueError):
            control_value(np.zeros(10), ControlPartition.equal(10.0, 10), t)


class TestControlJump:
    def test_switch_off(self):
        part = ControlPartition.equal(10.0, 10)
        assert control_jump(alternating_control(10), part, 0) == -1.0

    def test_no_switch(self):
        assert control_jump(np.zeros(10), ControlPartition.equal(10.0, 10), 0) == 0.0

    def test_switch_on(self):
        assert control_jump([0, 1], ControlPartition.equal(2.0, 2), 0) == 1.0

    @pytest.mark.parametrize("i", [-1, 9])
    def test_index_out_of_range(self, i):
        with pytest.raises(IndexError):
            control_jump(np.zeros(10), ControlPartition.equal(10.0, 10), i)


class TestFieldJump:
    def test_constant(self):
        assert field_jump(Constant(3.0), 1.0) == 0.0

    def test_per_interval(self):
        assert field_jump(PerIntervalConstant((2.0, 5.0), (0.0, 1.0, 2.0)), 1.0) == 3.0

    def test_sinusoid(self):
        assert field_jump(Sinusoid(5.0, 0.5, 1.0), math.pi) == 0.0


class TestFields:
    def test_sinusoid_values(self):
        s = Sinusoid(5.0, 0.5, 2.0)
        assert s(0.3) == pytest.approx(5.0 + 0.5 * math.sin(0.6))

    def test_per_interval_one_sided(self):
        f = PerIntervalConstant((2.0, 5.0), (0.0, 1.0, 2.0))
        assert f(1.0, "left") == 2.0
        assert f(1.0, "right") == 5.0
        assert f(0.5) == 2.0 and f(1.5) == 5.0

    def test_per_interval_length_checked(self):
        with pytest.raises(ConfigurationError):
            PerIntervalConstant((1.0,), (0.0, 1.0, 2.0))

    def test_bad_side(self):
        with pytest.raises(ValueError):
            Constant(1.0)(0.0, side="middle")

    def test_tabulated_linear_in_pieces(self):
        t = np.linspace(0.0, 2.0, 9)
        y = np.where(t < 1.0, 2 * t, 10 + t)
        f = Tabulated(tuple(t), tuple(y), (0.0, 1.0, 2.0))
        assert f(0.3) == pytest.approx(0.6)
        assert f(1.7) == pytest.approx(11.7)
        # the sample on the breakpoint is dropped; both limits are extrapolated
        assert f(1.0, "left") == pytest.approx(2.0)
        assert f(1.0, "right") == pytest.approx(11.0)
        assert f.jump(1.0) == pytest.approx(9.0)

    def test_tabulated_needs_two_samples_per_piece(self):
        with pytest.raises(ConfigurationError):
            Tabulated((0.0, 0.5, 1.5), (0.0, 1.0, 2.0), (0.0, 1.0, 2.0))

    def test_tabulated_rejects_unsorted(self):
        with pytest.raises(ConfigurationError):
            Tabulated((0.0, 2.0, 1.0), (0.0, 1.0, 2.0))


class TestPartition:
    def test_equal_lengths(self):
        part = ControlPartition.equal(10.0, 4)
        assert np.allclose(part.lengths, 2.5)
        assert part.n_intervals == 4
        assert part.interfaces.tolist() == [2.5, 5.0, 7.5]

    def test_unequal(self):
        part = ControlPartition((0.0, 0.5, 2.0, 3.0))
        assert part.interfaces.tolist() == [0.5, 2.0]
        assert part.interval_index(1.0) == 1
        assert part.interval_index(2.0, "left") == 1
        assert part.interval_index(2.0, "right") == 2

    @pytest.mark.parametrize("tau", [(0.0,), (0.5, 1.0), (0.0, 1.0, 1.0), (0.0, 2.0, 1.0)])
    def test_invalid(self, tau):
        with pytest.raises(ConfigurationError):
            ControlPartition(tau)

    def test_n_must_be_positive(self):
        with pytest.raises(ConfigurationError):
            ControlPartition.equal(1.0, 0)


class TestProblemSpec:
    base = dict(K=1.0, C=3.0, T_s=50.0, T_0=70.0, t_final=10.0)

    @pytest.mark.parametrize("key,value", [("K", 0.0), ("K", -1.0), ("C", 0.0), ("t_final", 0.0)])
    def test_invariants(self, key, value):
        args = dict(self.base, partition=ControlPartition.equal(10.0, 10))
        args[key] = value
        with pytest.raises(ConfigurationError):
            ProblemSpec(**args)

    def test_partition_must_span_horizon(self):
        with pytest.raises(ConfigurationError, match="t_final"):
            ProblemSpec(**self.base, partition=ControlPartition.equal(9.0, 10))

    def test_replace(self):
        spec = ProblemSpec(**self.base, partition=ControlPartition.equal(10.0, 10))
        other = spec.replace(K=2.0)
        assert other.K == 2.0 and spec.K == 1.0 and other.N == 10


class TestControls:
    def test_alternating(self):
        assert alternating_control(5).tolist() == [1, 0, 1, 0, 1]
        assert alternating_control(4, first=0).tolist() == [0, 1, 0, 1]

    def test_binary_check(self):
        with pytest.raises(ValueError):
            check_control([0, 0.5], 2, binary=True)
        with pytest.raises(ValueError):
            check_control([0, 1], 3)

    def test_relaxed_box(self):
        assert check_relaxed([0.0, 0.5, 1.0], 3).tolist() == [0.0, 0.5, 1.0]
        with pytest.raises(ValueError):
            check_relaxed([1.2], 1)


lengths = st.lists(st.floats(0.01, 10.0), min_size=1, max_size=30)


@given(lengths)
def test_lengths_sum_to_horizon(ls):
    tau = np.concatenate([[0.0], np.cumsum(ls)])
    part = ControlPartition(tuple(tau))
    assert math.isclose(part.lengths.sum(), part.t_final, rel_tol=1e-12)
    assert len(part.interfaces) == part.n_intervals - 1


@given(st.integers(1, 20), st.data())
def test_control_value_piecewise_constant(n, data):
    part = ControlPartition.equal(float(n), n)
    v = np.array(data.draw(st.lists(st.sampled_from([0.0, 1.0]), min_size=n, max_size=n)))
    i = data.draw(st.integers(0, n - 1))
    a, b = data.draw(st.floats(0.001, 0.999)), data.draw(st.floats(0.001, 0.999))
    assert control_value(v, part, i + a) == control_value(v, part, i + b) == v[i]


@settings(max_examples=50)
@given(st.lists(st.sampled_from([0.0, 1.0]), min_size=2, max_size=20))
def test_zero_jumps_iff_constant(v):
    n = len(v)
    part = ControlPartition.equal(float(n), n)
    jumps = [control_jump(v, part, i) for i in range(n - 1)]
    values = {control_value(v, part, t) for t in np.arange(n) + 0.5}
    assert all(j == 0 for j in jumps) == (len(values) == 1)
