"""Tests for the SU(2) ladder basis, vertex coefficients and the spin-chain Hamiltonian."""
import math
from fractions import Fraction

import numpy as np
import pytest

from HaydenPreskillScrambling.modules.config import YM_COUPLINGS
from HaydenPreskillScrambling.modules.gauge import (
    HalfInt,
    LadderBasisState,
    constructive_hamiltonian,
    dual_basis_hamiltonian,
    dual_spin_inverse,
    dual_spin_map,
    electric_matrix,
    enumerate_physical_basis,
    lambda_coeff,
    lambda_coeff_exact,
    lambda_schwinger,
    magnetic_matrix,
    plaquette_action,
    wigner_3j,
    ym_ising_closed_form,
)

HALF = Fraction(1, 2)


class TestHalfInt:

    def test_from_values(self):
        assert HalfInt.of(0.5).twice_value == 1
        assert HalfInt.of(Fraction(3, 2)).value == Fraction(3, 2)
        assert str(HalfInt(3)) == '3/2'
        assert str(HalfInt(4)) == '2'

    def test_rejects_non_half_integers(self):
        with pytest.raises(ValueError):
            HalfInt.of(0.3)
        with pytest.raises(ValueError):
            HalfInt(-1)


class TestWigner3j:

    def test_trivial(self):
        assert float(wigner_3j(0, 0, 0, 0, 0, 0)) == pytest.approx(1.0)

    def test_spin_half_singlet(self):
        assert float(wigner_3j(HALF, HALF, 0, HALF, -HALF, 0)) == pytest.approx(1 / math.sqrt(2))

    def test_triangle_violation(self):
        assert not wigner_3j(HALF, 0, 0, HALF, 0, 0)

    def test_m_sum_violation(self):
        assert not wigner_3j(1, 1, 1, 1, 1, 0)

    @pytest.mark.parametrize("twice_j", [1, 2, 3, 4])
    def test_zero_coupling_closed_form(self, twice_j):
        j = Fraction(twice_j, 2)
        for twice_m in range(-twice_j, twice_j + 1, 2):
            m = Fraction(twice_m, 2)
            expected = (-1) ** int(j - m) / math.sqrt(2 * j + 1)
            assert float(wigner_3j(j, j, 0, m, -m, 0)) == pytest.approx(expected, abs=1e-14)

    @pytest.mark.parametrize("j1, j2, j3", [(1, HALF, HALF), (1, 1, 1), (Fraction(3, 2), 1, HALF), (2, 1, 2)])
    def test_orthogonality(self, j1, j2, j3):
        j1, j2, j3 = Fraction(j1), Fraction(j2), Fraction(j3)
        m3 = -j3
        total = Fraction(0)
        for twice_m1 in range(-int(2 * j1), int(2 * j1) + 1, 2):
            m1 = Fraction(twice_m1, 2)
            m2 = -m1 - m3
            if abs(m2) <= j2:
                total += wigner_3j(j1, j2, j3, m1, m2, m3).square
        assert total == Fraction(1) / (2 * j3 + 1)


class TestLambda:

    def test_vertex_table(self):
        assert lambda_coeff(1, 1, 0, 0, 0) == pytest.approx(1.0)
        assert lambda_coeff(-1, -1, HALF, HALF, 0) == pytest.approx(1.0)
        assert lambda_coeff(1, -1, 0, HALF, HALF) == pytest.approx(-1.0)
        assert lambda_coeff(-1, 1, HALF, 0, HALF) == pytest.approx(0.5)

    def test_exact_values(self):
        value = lambda_coeff_exact(1, 1, HALF, HALF, 1)
        assert value.sign == 1
        assert value.square == Fraction(2, 3)

    def test_lowering_zero_spin_is_absent(self):
        assert lambda_coeff(-1, -1, 0, 0, 0) == 0.0
        assert lambda_coeff(1, -1, HALF, 0, HALF) == 0.0

    def test_invalid_signs(self):
        with pytest.raises(ValueError):
            lambda_coeff(2, 1, 0, 0, 0)

    @pytest.mark.parametrize("signs", [(1, 1), (1, -1), (-1, 1), (-1, -1)])
    def test_closed_form_matches_schwinger_bosons(self, signs):
        for ta in range(3):
            for tb in range(3):
                for tc in range(3):
                    spins = (Fraction(ta, 2), Fraction(tb, 2), Fraction(tc, 2))
                    assert lambda_schwinger(*signs, *spins) == pytest.approx(lambda_coeff(*signs, *spins), abs=1e-12)


class TestBasis:

    @pytest.mark.parametrize("n, j_max, size", [(1, HALF, 2), (2, HALF, 4), (3, HALF, 8), (3, 0, 1), (1, 1, 3)])
    def test_sizes(self, n, j_max, size):
        basis = enumerate_physical_basis(n, j_max)
        assert len(basis) == size
        assert all(state.is_physical() for state in basis)

    def test_order_follows_dual_spins(self):
        bits = [dual_spin_map(state) for state in enumerate_physical_basis(4, HALF)]
        assert bits == sorted(bits)
        assert len(set(bits)) == 16

    def test_single_loop_state(self):
        basis = enumerate_physical_basis(1, HALF)
        assert basis[1] == LadderBasisState((1,), (1,), (1, 1))

    def test_invalid_ladder(self):
        with pytest.raises(ValueError):
            LadderBasisState((0,), (0,), (0,))
        with pytest.raises(ValueError):
            enumerate_physical_basis(0, HALF)


class TestMatrices:

    def test_electric_vacuum_and_loop(self):
        energies = np.diag(electric_matrix(enumerate_physical_basis(1, HALF)).to_dense())
        np.testing.assert_allclose(energies, [0.0, 1.5])

    def test_single_plaquette_magnetic(self):
        magnetic = magnetic_matrix(enumerate_physical_basis(1, HALF), 1.0).to_dense()
        np.testing.assert_allclose(magnetic, [[0.0, -1.0], [-1.0, 0.0]], atol=1e-15)

    def test_zero_coupling(self):
        assert not magnetic_matrix(enumerate_physical_basis(3, HALF), 0.0).entries

    def test_constructive_hamiltonian_symmetric(self):
        _, h = constructive_hamiltonian(4, 2.0)
        assert h.is_symmetric()


class TestDualSpins:

    def test_vacuum_is_all_up(self):
        assert dual_spin_map(enumerate_physical_basis(3, HALF)[0]) == '000'

    def test_loop_is_down(self):
        assert dual_spin_map(LadderBasisState((1,), (1,), (1, 1))) == '1'

    def test_inverse(self):
        for state in enumerate_physical_basis(4, HALF):
            assert dual_spin_inverse(dual_spin_map(state)) == state

    def test_rejects_larger_spins(self):
        with pytest.raises(ValueError):
            dual_spin_map(LadderBasisState((2,), (2,), (2, 2)))
        with pytest.raises(ValueError):
            dual_spin_inverse('012')


class TestClosedForm:

    def test_single_plaquette(self):
        h = ym_ising_closed_form(1, 2.0)
        assert h.coefficient('I') == pytest.approx(0.75)
        assert h.coefficient('Z') == pytest.approx(-0.75)
        assert h.coefficient('X') == pytest.approx(-2.0)
        assert len(h) == 3

    def test_zero_coupling_is_diagonal(self):
        assert ym_ising_closed_form(5, 0.0).is_diagonal()

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
    @pytest.mark.parametrize("K", YM_COUPLINGS)
    def test_matches_constructive_hamiltonian(self, n, K):
        closed = ym_ising_closed_form(n, K).to_dense()
        np.testing.assert_allclose(closed, dual_basis_hamiltonian(n, K), atol=1e-12)


class TestPlaquetteAction:

    @pytest.mark.parametrize("state, amplitude, flipped", [
        ('000', 1.0, '010'),
        ('010', 1.0, '000'),
        ('001', -0.5, '011'),
        ('011', -0.5, '001'),
        ('100', -0.5, '110'),
        ('110', -0.5, '100'),
        ('101', 0.25, '111'),
        ('111', 0.25, '101'),
    ])
    def test_middle_plaquette(self, state, amplitude, flipped):
        value, out = plaquette_action(1, state)
        assert out == flipped
        assert value == pytest.approx(amplitude, abs=1e-15)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            plaquette_action(3, '000')
