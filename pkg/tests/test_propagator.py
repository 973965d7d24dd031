"""
时间演化算符测试
"""

import numpy as np
import pytest
from scipy.linalg import expm

from src.propagator.evolution import (
    PropagatorConfig,
    evolve,
    evolve_pair,
    step_halving_errors,
    step_unitary,
)
from src.utils.exceptions import ConfigurationError, DomainError, GeneratorError


def _smooth_generator():
    a = np.array([[0.0, 0.4, 0.1], [0.4, 0.5, 0.3], [0.1, 0.3, 1.0]])
    b = np.array([[0.2, 0.0, 0.5], [0.0, -0.3, 0.2], [0.5, 0.2, 0.1]])
    c = np.array([[0.0, 0.1, 0.0], [0.1, 0.0, -0.2], [0.0, -0.2, 0.3]])
    return lambda t: a + np.sin(t) * b + t * c


class TestStepUnitary:

    def test_matches_expm(self, rng):
        x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        h = x + x.conj().T
        np.testing.assert_allclose(step_unitary(h, 0.3), expm(-0.3j * h), atol=1e-12)


class TestEvolve:

    def test_zero_generator(self):
        result = evolve(lambda t: np.zeros((3, 3)), 0.0, 2.0, PropagatorConfig(0.1))
        np.testing.assert_allclose(result.final, np.eye(3), atol=1e-14)

    def test_diagonal_constant(self):
        energies = np.array([0.0, 1.5, -0.7])
        result = evolve(lambda t: np.diag(energies), 0.0, 3.0, PropagatorConfig(0.1))
        np.testing.assert_allclose(np.diag(result.final), np.exp(-1j * energies * 3.0), atol=1e-12)

    def test_rabi_oscillation(self):
        g = 0.8
        period = np.pi / g
        checkpoints = np.linspace(0.0, 5 * period, 101)
        result = evolve(lambda t: np.array([[0.0, g], [g, 0.0]]), 0.0, 5 * period,
                        PropagatorConfig(0.01), checkpoints)
        p = np.abs(result.unitaries[:, 1, 0]) ** 2
        np.testing.assert_allclose(p, np.sin(g * checkpoints) ** 2, atol=1e-8)

    def test_checkpoint_at_start_is_identity(self):
        result = evolve(_smooth_generator(), 0.0, 1.0, PropagatorConfig(0.1), [0.0, 1.0])
        np.testing.assert_array_equal(result.unitaries[0], np.eye(3))

    def test_composition(self):
        gen = _smooth_generator()
        config = PropagatorConfig(0.02)
        whole = evolve(gen, 0.0, 2.0, config, [1.0, 2.0])
        first = evolve(gen, 0.0, 1.0, config)
        second = evolve(gen, 1.0, 2.0, config)
        np.testing.assert_allclose(whole.unitaries[0], first.final, atol=1e-13)
        np.testing.assert_allclose(whole.final, second.final @ first.final, atol=1e-12)

    def test_unitarity(self):
        result = evolve(_smooth_generator(), 0.0, 5.0, PropagatorConfig(0.01),
                        np.linspace(0.5, 5.0, 10))
        assert result.max_defect <= 1e-9
        assert result.steps == 500

    def test_step_halving_second_order(self):
        errors = step_halving_errors(_smooth_generator(), 0.0, 2.0, PropagatorConfig(0.05), levels=3)
        ratios = np.array(errors[:-1]) / np.array(errors[1:])
        assert np.all((ratios > 4 * 0.8) & (ratios < 4 * 1.2))

    def test_non_hermitian_generator(self):
        bad = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(GeneratorError):
            evolve(lambda t: bad, 0.0, 1.0, PropagatorConfig(0.1))

    def test_non_finite_generator(self):
        with pytest.raises(GeneratorError):
            evolve(lambda t: np.full((2, 2), np.nan), 0.0, 1.0, PropagatorConfig(0.1))

    def test_step_budget(self):
        config = PropagatorConfig(1e-3, max_steps=100)
        with pytest.raises(ConfigurationError):
            evolve(lambda t: np.eye(2), 0.0, 1.0, config)

    @pytest.mark.parametrize('kwargs', [dict(max_step=0.0), dict(max_step=float('inf')),
                                        dict(max_step=0.1, method='rk4')])
    def test_invalid_config(self, kwargs):
        with pytest.raises(ConfigurationError):
            PropagatorConfig(**kwargs)

    def test_bad_checkpoints(self):
        with pytest.raises(ConfigurationError):
            evolve(lambda t: np.eye(2), 0.0, 1.0, PropagatorConfig(0.1), [0.5, 0.2])
        with pytest.raises(ConfigurationError):
            evolve(lambda t: np.eye(2), 0.0, 1.0, PropagatorConfig(0.1), [1.5])

    def test_to_dict_interleaved(self):
        result = evolve(lambda t: np.diag([0.0, 1.0]), 0.0, 1.0, PropagatorConfig(0.5))
        data = result.to_dict()
        assert data['dim'] == 2
        row = data['unitaries'][0]
        assert len(row) == 8
        assert row[6] == pytest.approx(np.cos(1.0))
        assert row[7] == pytest.approx(-np.sin(1.0))


class TestEvolvePair:

    def test_scaled_time_reproduces_exact(self):
        # H_sim(τ) = H(τ/λ)/λ 且 τ = λ·t 时两端一致
        gen = _smooth_generator()
        lam = 4.0
        checkpoints = np.linspace(0.0, 1.0, 6)
        paired = evolve_pair(gen, lambda tau: gen(tau / lam) / lam, lambda t: lam * np.asarray(t),
                             checkpoints, PropagatorConfig(0.01), PropagatorConfig(0.04))
        np.testing.assert_allclose(paired.t_qc, lam * checkpoints)
        for u, v in zip(paired.exact.unitaries, paired.simulated.unitaries):
            np.testing.assert_allclose(u, v, atol=1e-12)

    def test_non_monotone_map(self):
        gen = _smooth_generator()
        with pytest.raises(DomainError):
            evolve_pair(gen, gen, lambda t: -np.asarray(t), [0.0, 0.5, 1.0],
                        PropagatorConfig(0.1), PropagatorConfig(0.1))
