"""
耦合张量、硬件约束与电路模型测试
"""

import json
import math

import numpy as np
import pytest

from src.circuit.constraints import HardwareConstraints
from src.circuit.operators import (
    CircuitModel,
    excitation_numbers,
    hn_matrix,
    sector_mixing,
    single_excitation_indices,
    single_excitation_projector,
    traceless,
)
from src.circuit.tensor import (
    CouplingTensor,
    alpha,
    conserves_excitation,
    load_tensor,
    pair_operator,
    pauli_decompose,
    phi_coefficients,
    tensor_preset,
)
from src.utils.exceptions import (
    CapacityError,
    ConfigurationError,
    DataFormatError,
    NonNormalizableError,
    SingularMatrixElementError,
)


def _random_symmetric(rng, n, scale=1.0):
    a = rng.normal(scale=scale, size=(n, n))
    return a + a.T


class TestPhi:

    def test_default_coefficients(self):
        p = phi_coefficients(11.0, 11.0, 1.0)
        assert p.c_z == 0.0
        assert p.c_0 == 11.0
        np.testing.assert_array_equal(p.vector(), [11.0, 1.0, 0.0, 0.0])

    def test_asymmetric_elements(self):
        p = phi_coefficients(3.0, 1.0, 2.0)
        assert p.c_z == pytest.approx(0.5)
        assert p.c_0 == pytest.approx(1.0)

    def test_singular(self):
        with pytest.raises(SingularMatrixElementError):
            phi_coefficients(1.0, 1.0, 0.0)


class TestTensor:

    def test_phase_qubit_default(self):
        t = tensor_preset('phase-qubit-default')
        assert t.normalized
        assert t.component('x', 'x') == 1.0
        assert t.component('0', '0') == 121.0
        assert t.component('0', 'x') == 11.0
        assert t.component('x', '0') == 11.0
        assert alpha(t) == 0.0
        assert not conserves_excitation(t)

    def test_xy_exchange(self):
        t = tensor_preset('xy-exchange')
        assert t.normalized
        assert conserves_excitation(t)
        assert alpha(t) == 0.0

    def test_pure_xx(self):
        t = tensor_preset('pure-xx')
        assert t.normalized
        assert not conserves_excitation(t)

    def test_unknown_preset(self):
        with pytest.raises(ConfigurationError):
            tensor_preset('ising')

    def test_normalization_records_scale(self):
        J = np.zeros((4, 4))
        J[1, 1] = 3.0
        J[2, 2] = 1.0
        J[3, 3] = 2.0
        t = CouplingTensor.from_matrix(J)
        assert t.scale == 4.0
        assert t.component('z', 'z') == 0.5
        assert alpha(t) == 1.0

    def test_symmetrized(self):
        J = np.zeros((4, 4))
        J[1, 1] = 1.0
        J[3, 0] = 0.4
        t = CouplingTensor.from_matrix(J)
        assert t.component('z', '0') == pytest.approx(0.2)
        assert t.component('0', 'z') == pytest.approx(0.2)

    def test_not_normalizable(self):
        J = np.zeros((4, 4))
        J[3, 3] = 1.0
        with pytest.raises(NonNormalizableError):
            CouplingTensor.from_matrix(J)

    def test_bad_shape(self):
        with pytest.raises(DataFormatError):
            CouplingTensor.from_matrix(np.eye(3))

    def test_json_round_trip(self, tmp_path):
        t = tensor_preset('phase-qubit-default')
        path = t.to_json(tmp_path / 'tensor.json')
        data = json.loads(path.read_text(encoding='utf-8'))
        assert data['normalized'] is True
        loaded = load_tensor(str(path))
        np.testing.assert_array_equal(loaded.J, t.J)
        assert loaded.normalized is True

    def test_pauli_decompose_inverts_pair_operator(self, rng):
        J = _random_symmetric(rng, 4)
        np.testing.assert_allclose(pauli_decompose(pair_operator(J)).real, J, atol=1e-12)
        np.testing.assert_allclose(pauli_decompose(pair_operator(J)).imag, 0.0, atol=1e-12)


class TestConstraints:

    def test_delta_eps(self):
        c = HardwareConstraints.from_dict({'g_max': 2, 'eps_max': 6000, 'delta_eps': 190})
        assert c.eps_min == 5810.0
        assert c.delta_eps == 190.0
        assert math.isinf(c.v_g_max)

    def test_canonical(self):
        c = HardwareConstraints(2.0, 5810.0, 6000.0, 50.0, 1000.0).to_canonical()
        assert c.unit == 'rad_ns'
        assert c.g_max == pytest.approx(2.0 * 2 * math.pi * 1e-3)
        assert c.v_eps_max == pytest.approx(1000.0 * 2 * math.pi * 1e-3)

    @pytest.mark.parametrize('kwargs', [
        dict(g_max=0.0, eps_min=1.0, eps_max=2.0),
        dict(g_max=1.0, eps_min=2.0, eps_max=2.0),
        dict(g_max=1.0, eps_min=1.0, eps_max=2.0, v_g_max=-1.0),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            HardwareConstraints(**kwargs)

    def test_missing_field(self):
        with pytest.raises(ConfigurationError):
            HardwareConstraints.from_dict({'g_max': 1.0})


class TestSubspace:

    def test_indices_msb_convention(self):
        np.testing.assert_array_equal(single_excitation_indices(3), [4, 2, 1])

    def test_projector(self):
        p = single_excitation_projector(4)
        np.testing.assert_array_equal(p @ p.T, np.eye(4))
        assert p.shape == (4, 16)

    def test_excitation_numbers(self):
        np.testing.assert_array_equal(excitation_numbers(2), [0, 1, 1, 2])

    def test_hn_matrix(self):
        g = np.array([[9.0, 1.0, 2.0], [1.0, 9.0, 3.0], [2.0, 3.0, 9.0]])
        h = hn_matrix([10.0, 20.0, 30.0], g, 0.5)
        np.testing.assert_array_equal(np.diag(h), [10.0 - 1.5, 20.0 - 2.0, 30.0 - 2.5])
        assert h[0, 1] == 1.0 and h[1, 2] == 3.0
        np.testing.assert_array_equal(h, h.T)


class TestCircuitModel:

    def test_capacity(self):
        with pytest.raises(CapacityError):
            CircuitModel(13, tensor_preset('xy-exchange'))

    def test_capacity_configurable(self):
        with pytest.raises(CapacityError):
            CircuitModel(4, tensor_preset('xy-exchange'), max_qubits=3)

    def test_hqc_hermitian(self, rng):
        model = CircuitModel(3, tensor_preset('phase-qubit-default'))
        h = model.hqc_matrix(rng.uniform(30, 38, 3), _random_symmetric(rng, 3, 0.01))
        np.testing.assert_allclose(h, h.conj().T, atol=1e-14)

    def test_single_qubit_term(self):
        model = CircuitModel(2, tensor_preset('xy-exchange'))
        h = model.hqc_matrix([2.0, 4.0], np.zeros((2, 2)))
        # −ε_i/2·σ^z_i，比特 0 为最高位
        np.testing.assert_allclose(np.diag(h).real, [-3.0, 1.0, -1.0, 3.0])

    def test_pair_term_matches_pauli_sum(self, rng):
        tensor = tensor_preset('phase-qubit-default')
        model = CircuitModel(2, tensor)
        g = np.array([[0.0, 0.3], [0.3, 0.0]])
        h = model.hqc_matrix(np.zeros(2), g)
        np.testing.assert_allclose(h, 0.3 * pair_operator(tensor.J), atol=1e-13)

    @pytest.mark.parametrize('n', [2, 3, 4])
    def test_projection_equals_hn(self, rng, n):
        # 任意对称张量：P·H_qc·P† 与 H_n 只差单位阵倍数
        J = _random_symmetric(rng, 4)
        J[1, 1], J[2, 2] = 0.7, 0.3
        tensor = CouplingTensor.from_matrix(J)
        model = CircuitModel(n, tensor)
        eps = rng.uniform(30.0, 38.0, n)
        g = _random_symmetric(rng, n, 0.01)
        np.fill_diagonal(g, 0.0)
        block = model.subspace_block(eps, g)
        expected = hn_matrix(eps, g, alpha(tensor))
        np.testing.assert_allclose(traceless(block), traceless(expected), atol=1e-12)

    def test_xy_exchange_block_diagonal(self, rng):
        n = 3
        model = CircuitModel(n, tensor_preset('xy-exchange'))
        g = _random_symmetric(rng, n, 0.05)
        h = model.hqc_matrix(rng.uniform(30, 38, n), g)
        to_single, across = sector_mixing(h, n)
        assert to_single == 0.0
        assert across == 0.0

    def test_phase_qubit_leaks(self, rng):
        n = 3
        model = CircuitModel(n, tensor_preset('phase-qubit-default'))
        g = _random_symmetric(rng, n, 0.05)
        to_single, _ = sector_mixing(model.hqc_matrix(rng.uniform(30, 38, n), g), n)
        assert to_single > 0.0
