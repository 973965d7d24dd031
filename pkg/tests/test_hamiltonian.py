"""
目标哈密顿量与单位换算测试
"""

import math

import numpy as np
import pytest

from src.hamiltonian import units
from src.hamiltonian.target import (
    TargetHamiltonian,
    check_resolution,
    energy_profile,
    simulated_energies,
    stack_constant,
    validate,
)
from src.utils.exceptions import DataFormatError, TimeRangeError, UnitError


def _ramp(unit='au'):
    times = np.array([0.0, 1.0, 3.0])
    matrices = np.array([
        [[0.0, 1.0], [1.0, 2.0]],
        [[1.0, 3.0], [3.0, 0.0]],
        [[5.0, -1.0], [-1.0, 4.0]],
    ])
    return TargetHamiltonian(times, matrices, unit)


class TestUnits:

    def test_atomic_time(self):
        assert units.convert_time(1.0, 'au') == pytest.approx(2.4188843265857e-8, rel=1e-15)

    def test_mhz_energy(self):
        assert units.convert_energy(1.0, 'mhz') == pytest.approx(2 * math.pi * 1e-3, rel=1e-15)
        assert units.convert_energy(units.MHZ_RAD_PER_NS, 'rad_ns', 'mhz') == pytest.approx(1.0)

    def test_hartree_to_mhz_round_trip(self):
        value = units.convert_energy(0.0773, 'au', 'mhz')
        assert units.convert_energy(value, 'mhz', 'au') == pytest.approx(0.0773, rel=1e-14)

    def test_alias_and_case(self):
        assert units.normalize_unit('Hartree') == 'au'
        assert units.normalize_unit(' MHz ') == 'mhz'

    def test_unknown_unit(self):
        with pytest.raises(UnitError):
            units.normalize_unit('kelvin')
        with pytest.raises(UnitError):
            TargetHamiltonian([0.0, 1.0], np.zeros((2, 2, 2)), 'furlong')


class TestSampling:

    def test_nodes_exact(self):
        h = _ramp()
        for k, t in enumerate(h.times):
            np.testing.assert_array_equal(h.sample(t), h.matrices[k])

    def test_linear_between_nodes(self):
        h = _ramp()
        expected = 0.5 * (h.matrices[1] + h.matrices[2])
        np.testing.assert_allclose(h.sample(2.0), expected, rtol=0, atol=1e-15)

    def test_sample_symmetric(self, rng):
        h = _ramp()
        for t in rng.uniform(0.0, 3.0, size=20):
            m = h.sample(t)
            np.testing.assert_array_equal(m, m.T)

    def test_sample_many_matches_sample(self):
        h = _ramp()
        ts = [0.0, 0.25, 1.0, 2.5, 3.0]
        batch = h.sample_many(ts)
        for t, m in zip(ts, batch):
            np.testing.assert_allclose(m, h.sample(t), rtol=0, atol=1e-15)

    @pytest.mark.parametrize('t', [-1e-9, 3.0000001, float('nan')])
    def test_out_of_range(self, t):
        with pytest.raises(TimeRangeError):
            _ramp().sample(t)

    def test_refine_keeps_function(self):
        h = _ramp()
        fine = h.refine(np.linspace(0.0, 3.0, 13))
        for t in (0.3, 1.7, 2.9):
            np.testing.assert_allclose(fine.sample(t), h.sample(t), atol=1e-14)


class TestConstruction:

    def test_shape_mismatch(self):
        with pytest.raises(DataFormatError):
            TargetHamiltonian([0.0, 1.0, 2.0], np.zeros((2, 2, 2)))

    def test_single_node(self):
        with pytest.raises(DataFormatError):
            TargetHamiltonian([0.0], np.zeros((1, 2, 2)))

    def test_immutable(self):
        h = _ramp()
        with pytest.raises(ValueError):
            h.matrices[0, 0, 0] = 1.0

    def test_converted_canonical(self):
        h = _ramp('mhz')
        c = h.to_canonical()
        assert c.unit == 'rad_ns'
        np.testing.assert_allclose(c.matrices, h.matrices * units.MHZ_RAD_PER_NS)
        np.testing.assert_array_equal(c.times, h.times)

    def test_scaled(self):
        h = _ramp()
        np.testing.assert_array_equal(h.scaled(4.0).matrices, 4.0 * h.matrices)


class TestEnergies:

    def test_alpha_zero(self):
        h = _ramp()
        prof = simulated_energies(h, 0.0, 0.0)
        np.testing.assert_array_equal(prof.energies, [0.0, 2.0])
        assert prof.e_max == 2.0
        np.testing.assert_array_equal(prof.delta, [2.0, 0.0])

    def test_alpha_shift(self):
        h = _ramp()
        prof = simulated_energies(h, 0.5, 1.0)
        # E_i = H_ii + α·Σ_{j≠i} H_ij
        np.testing.assert_allclose(prof.energies, [1.0 + 1.5, 0.0 + 1.5])

    def test_delta_nonnegative_with_zero(self, rng):
        a = rng.normal(size=(6, 4, 4))
        h = TargetHamiltonian(np.arange(6.0), a + a.transpose(0, 2, 1))
        prof = energy_profile(h, 0.3)
        assert np.all(prof.delta >= 0)
        assert np.all(np.min(prof.delta, axis=1) == 0)

    def test_non_finite_alpha(self):
        with pytest.raises(ValueError):
            simulated_energies(_ramp(), float('inf'), 0.0)


class TestValidate:

    def test_valid(self):
        assert validate(_ramp()).is_valid()

    def test_non_monotone_grid(self):
        h = TargetHamiltonian([0.0, 2.0, 1.0], np.zeros((3, 2, 2)))
        report = validate(h)
        assert 'non_monotone_grid' in report.codes()
        assert report.violations[0].node == 2

    def test_asymmetric(self):
        m = np.zeros((2, 3, 3))
        m[1, 0, 2] = 1e-3
        report = validate(TargetHamiltonian([0.0, 1.0], m))
        assert report.codes() == ['asymmetric']
        assert report.violations[0].index == (0, 2)

    def test_non_finite(self):
        m = np.zeros((2, 2, 2))
        m[1, 0, 0] = np.nan
        assert 'non_finite' in validate(TargetHamiltonian([0.0, 1.0], m)).codes()

    def test_coarse_grid_warns_without_failing(self):
        report = validate(_ramp())
        assert report.is_valid()
        assert len(report.warnings) == 1
        assert '网格偏粗' in report.warnings[0]

    def test_fine_grid_has_no_warning(self):
        times = np.linspace(0.0, 1.0, 101)
        m = np.zeros((101, 2, 2))
        m[:, 0, 1] = m[:, 1, 0] = np.sin(times)
        assert check_resolution(TargetHamiltonian(times, m)).warnings == []


class TestDerivative:

    def test_quadratic_interior_exact(self):
        times = np.linspace(0.0, 2.0, 21)
        m = np.zeros((21, 2, 2))
        m[:, 0, 1] = m[:, 1, 0] = times ** 2
        d = TargetHamiltonian(times, m).derivative()
        assert d.shape == (21, 2, 2)
        # 二阶中心差分对二次函数在内部节点精确
        np.testing.assert_allclose(d[1:-1, 0, 1], 2.0 * times[1:-1], rtol=1e-12)
        np.testing.assert_array_equal(d[:, 0, 0], 0.0)

    def test_two_nodes(self):
        d = TargetHamiltonian([0.0, 2.0], [[[0.0, 1.0], [1.0, 0.0]], [[4.0, 3.0], [3.0, 0.0]]]).derivative()
        np.testing.assert_allclose(d, [[[2.0, 1.0], [1.0, 0.0]]] * 2)


class TestSerialization:

    def test_csv_round_trip(self, tmp_path):
        h = _ramp()
        path = tmp_path / 'h.csv'
        h.to_frame().to_csv(path, index=False, float_format='%.17g')
        loaded = TargetHamiltonian.from_csv(path)
        np.testing.assert_array_equal(loaded.matrices, h.matrices)

    def test_csv_bad_row(self, tmp_path):
        path = tmp_path / 'h.csv'
        path.write_text("t,H11,H12,H22\n0,1,2,3\n1,x,2,3\n", encoding='utf-8')
        with pytest.raises(DataFormatError) as info:
            TargetHamiltonian.from_csv(path)
        assert info.value.line == 3

    def test_json_round_trip(self, tmp_path):
        h = _ramp('mhz')
        loaded = TargetHamiltonian.from_json(h.to_json(tmp_path / 'h.json'))
        assert loaded.unit == 'mhz'
        np.testing.assert_array_equal(loaded.matrices, h.matrices)

    def test_stack_constant(self):
        h = stack_constant(np.eye(2), [0.0, 1.0, 2.0], 'mhz')
        assert h.matrices.shape == (3, 2, 2)
        assert h.unit == 'mhz'
