"""
评分指标与模拟报告测试
"""

import json

import numpy as np
import pytest
from scipy.stats import unitary_group

from src.circuit.operators import single_excitation_indices
from src.metrics.report import SimulationReport
from src.metrics.scoring import (
    average_source_fidelity,
    fidelity,
    global_phase,
    leakage,
    process_fidelity,
    projected_probabilities,
    transition_probabilities,
)
from src.propagator.evolution import EvolutionResult
from src.utils.exceptions import InputError


class TestTransitionProbabilities:

    def test_identity(self):
        np.testing.assert_array_equal(transition_probabilities(np.eye(3), 1), [0.0, 1.0, 0.0])

    def test_full_transfer(self):
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_array_equal(transition_probabilities(swap, 0), [0.0, 1.0])

    def test_sums_to_one(self):
        u = unitary_group.rvs(5, random_state=7)
        for s in range(5):
            assert transition_probabilities(u, s).sum() == pytest.approx(1.0, abs=1e-12)

    def test_non_unitary(self):
        with pytest.raises(InputError):
            transition_probabilities(2.0 * np.eye(2))

    @pytest.mark.parametrize('source', [-1, 3])
    def test_source_out_of_range(self, source):
        with pytest.raises(InputError):
            transition_probabilities(np.eye(3), source)

    def test_not_square(self):
        with pytest.raises(InputError):
            transition_probabilities(np.ones((2, 3)))


class TestFidelity:

    def test_identical(self):
        u = unitary_group.rvs(4, random_state=3)
        assert fidelity(u, u, 2) == pytest.approx(1.0, abs=1e-12)

    def test_global_phase_invariance(self, rng):
        u = unitary_group.rvs(3, random_state=11)
        v = unitary_group.rvs(3, random_state=12)
        base = fidelity(u, v, 0)
        for theta in rng.uniform(0.0, 2 * np.pi, size=20):
            phase = np.exp(1j * theta)
            assert fidelity(phase * u, v, 0) == pytest.approx(base, abs=1e-12)
            assert fidelity(u, phase * v, 0) == pytest.approx(base, abs=1e-12)

    def test_orthogonal(self):
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert fidelity(np.eye(2), swap, 0) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            fidelity(np.eye(2), np.eye(3))

    def test_process_fidelity_phase(self):
        u = unitary_group.rvs(3, random_state=5)
        assert process_fidelity(u, np.exp(0.7j) * u) == pytest.approx(1.0, abs=1e-12)
        assert global_phase(u, np.exp(0.7j) * u) == pytest.approx(0.7, abs=1e-12)

    def test_average_source_fidelity(self):
        u = unitary_group.rvs(3, random_state=9)
        assert average_source_fidelity(u, u) == pytest.approx(1.0, abs=1e-12)


class TestLeakage:

    def test_identity(self):
        idx = single_excitation_indices(3)
        assert leakage(np.eye(8), idx, 1) == 0.0

    def test_swap_to_ground(self):
        # 单激发态 |10⟩ 与基态 |00⟩ 交换：完全泄漏
        idx = single_excitation_indices(2)
        perm = np.eye(4)[[2, 1, 0, 3]]
        assert leakage(perm, idx, 0) == pytest.approx(1.0)
        assert leakage(perm, idx, 1) == 0.0

    def test_complements_projected_probabilities(self):
        u = unitary_group.rvs(8, random_state=21)
        idx = single_excitation_indices(3)
        for s in range(3):
            sub = u[np.ix_(idx, idx)]
            total = projected_probabilities(sub, s).sum()
            assert leakage(u, idx, s) == pytest.approx(1.0 - total, abs=1e-12)

    def test_equals_weight_outside_subspace(self):
        u = unitary_group.rvs(8, random_state=4)
        idx = single_excitation_indices(3)
        outside = np.setdiff1d(np.arange(8), idx)
        column = u[:, idx[0]]
        assert leakage(u, idx, 0) == pytest.approx(np.sum(np.abs(column[outside]) ** 2), abs=1e-12)

    def test_rejects_non_unitary(self):
        idx = single_excitation_indices(3)
        damped = 0.9 * np.eye(8)
        with pytest.raises(InputError, match="非幺正"):
            leakage(damped, idx, 0)
        assert leakage(damped, idx, 0, tol=1.0) == pytest.approx(1.0 - 0.81)


def _result(unitaries, times):
    unitaries = np.asarray(unitaries, dtype=complex)
    return EvolutionResult(np.asarray(times, dtype=float), unitaries,
                           np.zeros(len(times)), steps=len(times))


class TestReport:

    def _report(self):
        n = 2
        exact = _result([np.eye(n), np.array([[0.0, 1.0], [1.0, 0.0]])], [0.0, 1.0])
        ideal = _result([np.eye(n), np.array([[0.0, 1.0], [1.0, 0.0]])], [0.0, 5.0])
        circuit = _result([np.eye(4), np.eye(4)[[0, 2, 1, 3]]], [0.0, 5.0])
        return SimulationReport.from_evolutions(exact, ideal, circuit, single_excitation_indices(n))

    def test_perfect_transfer(self):
        report = self._report()
        assert report.final_fidelity == pytest.approx(1.0)
        assert report.final_leakage == 0.0
        assert report.hardware_time_ns == 5.0
        np.testing.assert_allclose(report.p_exact[-1], [0.0, 1.0])

    def test_frame_columns(self):
        frame = self._report().to_frame()
        assert list(frame.columns) == ['t', 't_qc', 'P_exact_1', 'P_exact_2', 'P_sim_1', 'P_sim_2',
                                       'F', 'F_ideal', 'L']

    def test_write(self, tmp_path):
        files = self._report().write(tmp_path)
        summary = json.loads(files['json'].read_text(encoding='utf-8'))
        assert summary['source_channel'] == 1
        assert summary['final_probabilities_exact'] == pytest.approx([0.0, 1.0])
        assert 'process_fidelity' in summary

    def test_checkpoint_mismatch(self):
        exact = _result([np.eye(2)] * 3, [0.0, 0.5, 1.0])
        ideal = _result([np.eye(2)] * 2, [0.0, 1.0])
        with pytest.raises(InputError):
            SimulationReport.from_evolutions(exact, ideal, None, single_excitation_indices(2))

    def test_without_circuit(self):
        exact = _result([np.eye(2)] * 2, [0.0, 1.0])
        report = SimulationReport.from_evolutions(exact, exact, None, single_excitation_indices(2))
        np.testing.assert_array_equal(report.leakage, 0.0)
        assert report.final_fidelity == 1.0
