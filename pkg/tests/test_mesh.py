import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from bangbang import (
    ConfigurationError,
    ControlPartition,
    InterfaceMode,
    PerIntervalConstant,
    ProblemSpec,
    adjoint_jumps,
    alternating_control,
    build_mesh,
    classify_backward,
    classify_forward,
    require_interior_nodes,
    state_jumps,
)
from bangbang.verification import closed_form_jumps


class TestBuildMesh:
    def test_five_steps(self):
        assert build_mesh(10.0, 5).nodes.tolist() == [0, 2, 4, 6, 8, 10]

    def test_single_step(self):
        assert build_mesh(1.0, 1).nodes.tolist() == [0.0, 1.0]

    def test_fine_step(self, switch_spec):
        mesh = build_mesh(switch_spec, 2048)
        assert mesh.dt == 10.0 / 2048
        assert mesh.nodes.size == 2049

    def test_last_node_exact(self):
        mesh = build_mesh(0.3, 7)
        assert mesh.nodes[-1] == 0.3
        assert np.all(np.diff(mesh.nodes) > 0)

    @pytest.mark.parametrize("n", [0, -3, 2.5])
    def test_invalid_step_count(self, n):
        with pytest.raises(ConfigurationError) as err:
            build_mesh(1.0, n)
        assert str(err.value) == "mesh: N_t must be ≥ 1"


class TestClassification:
    part = ControlPartition.equal(10.0, 10)

    def test_forward_on_node(self):
        cls = classify_forward(build_mesh(10.0, 20), self.part)
        assert cls.interface_at(2) == 0          # t = 1
        assert cls.is_irregular(2) and not cls.is_irregular(1)

    def test_forward_inside_cell(self):
        cls = classify_forward(build_mesh(10.0, 32), self.part)
        assert cls.interface_at(3) == 0          # cell [0.9375, 1.25]
        assert cls.nodes.tolist()[:3] == [3, 6, 9]

    def test_backward_on_node(self):
        cls = classify_backward(build_mesh(10.0, 20), self.part)
        assert cls.interface_at(2) == 0

    def test_backward_inside_cell(self):
        cls = classify_backward(build_mesh(10.0, 32), self.part)
        assert cls.interface_at(4) == 0          # t_4 = 1.25

    @pytest.mark.parametrize("classify", [classify_forward, classify_backward])
    def test_single_interval_all_regular(self, classify):
        cls = classify(build_mesh(10.0, 7), ControlPartition.equal(10.0, 1))
        assert cls.n_irregular == 0
        assert not any(cls.is_irregular(n) for n in range(8))

    def test_cell_too_large(self):
        with pytest.raises(ConfigurationError, match="interval 0"):
            classify_forward(build_mesh(10.0, 10), self.part)

    def test_cell_too_large_names_unequal_interval(self):
        part = ControlPartition((0.0, 4.0, 4.5, 10.0))
        with pytest.raises(ConfigurationError, match=r"interval 1 \[4, 4.5\]"):
            classify_backward(build_mesh(10.0, 16), part)

    def test_interior_nodes(self):
        require_interior_nodes(build_mesh(10.0, 32), self.part)
        with pytest.raises(ConfigurationError, match="interior nodes"):
            require_interior_nodes(build_mesh(10.0, 20), self.part)


@given(st.lists(st.floats(0.05, 3.0), min_size=1, max_size=12), st.integers(1, 400))
def test_classification_properties(lengths, n_t):
    tau = np.concatenate([[0.0], np.cumsum(lengths)])
    part = ControlPartition(tuple(tau))
    mesh = build_mesh(part.t_final, n_t)
    assume(mesh.dt < min(part.lengths))
    fwd = classify_forward(mesh, part)
    bwd = classify_backward(mesh, part)
    t, dt = mesh.nodes, mesh.dt
    assert fwd.n_irregular == bwd.n_irregular == part.n_intervals - 1
    assert len(set(fwd.node_of_interface)) == fwd.n_irregular
    for i, (nf, nb) in enumerate(zip(fwd.nodes, bwd.nodes)):
        a = part.interfaces[i]
        assert t[nf] <= a < t[nf + 1]
        assert 0 <= a - t[nf] <= dt
        assert t[nb - 1] < a <= t[nb]


class TestStateJumps:
    def test_switch_off_continuous(self):
        spec = ProblemSpec(K=1.0, C=3.0, T_s=0.0, T_0=0.0, t_final=2.0,
                           partition=ControlPartition.equal(2.0, 2))
        jumps = state_jumps(spec, [1, 0])
        assert jumps.q.tolist() == [0.0]
        assert jumps.derivative_jump().tolist() == [-3.0]

    def test_constant_control(self, switch_spec):
        jumps = state_jumps(switch_spec, np.ones(10))
        assert np.all(jumps.q == 0) and np.all(jumps.derivative_jump() == 0)

    def test_prescribed_from_closed_form(self, switch_spec):
        q = closed_form_jumps(switch_spec)
        expected = (50 + 20 * math.exp(-1)) - (53 + 17 * math.exp(-1))
        assert q[0] == pytest.approx(expected, abs=1e-12)
        assert q[0] == pytest.approx(-1.8964, abs=1e-4)
        jumps = state_jumps(switch_spec, alternating_control(10), InterfaceMode.prescribed(q))
        assert jumps.q[0] == q[0]

    def test_prescribed_length_checked(self, switch_spec):
        with pytest.raises(ValueError):
            state_jumps(switch_spec, alternating_control(10), InterfaceMode.prescribed([1.0, 2.0]))

    def test_augmented_jumps_unknown(self, switch_spec):
        jumps = state_jumps(switch_spec, alternating_control(10), InterfaceMode.augmented())
        assert jumps.q is None
        with pytest.raises(ValueError):
            jumps.derivative_jump()

    @given(st.floats(-5, 5), st.floats(0.1, 5), st.floats(0.1, 5), st.sampled_from([-1, 0, 1]),
           st.floats(-5, 5))
    def test_derivative_jump_linear(self, q, K, C, dw, df):
        spec = ProblemSpec(K=K, C=C, T_s=0.0, T_0=0.0, t_final=2.0,
                           partition=ControlPartition.equal(2.0, 2),
                           forcing=PerIntervalConstant((0.0, df), (0.0, 1.0, 2.0)))
        v = [0.0, float(dw)] if dw >= 0 else [1.0, 0.0]
        jumps = state_jumps(spec, v, InterfaceMode.prescribed([q]))
        assert jumps.derivative_jump()[0] == pytest.approx(-K * q + C * dw + df)


class TestInterfaceMode:
    def test_bad_kind(self):
        with pytest.raises(ConfigurationError):
            InterfaceMode("sideways")

    def test_prescribed_needs_values(self):
        with pytest.raises(ConfigurationError):
            InterfaceMode("prescribed")
        with pytest.raises(ConfigurationError):
            InterfaceMode("continuous", (1.0,))


class TestAdjointJumps:
    def test_known_part(self, switch_spec):
        q = closed_form_jumps(switch_spec)
        jumps = adjoint_jumps(switch_spec, q)
        assert np.allclose(jumps.derivative_jump(), -q)

    def test_source_jump_is_reversed(self):
        spec = ProblemSpec(K=2.0, C=1.0, T_s=0.0, T_0=0.0, t_final=2.0,
                           partition=ControlPartition.equal(2.0, 2),
                           adjoint_source=PerIntervalConstant((1.0, 4.0), (0.0, 1.0, 2.0)))
        jumps = adjoint_jumps(spec, [0.0], InterfaceMode.prescribed([0.5]))
        # K q_lambda - q - [g]_backward with [g]_backward = -[g] = -3
        assert jumps.derivative_jump()[0] == pytest.approx(2.0 * 0.5 + 3.0)

    def test_shape_checked(self, switch_spec):
        with pytest.raises(ValueError):
            adjoint_jumps(switch_spec, [0.0])
