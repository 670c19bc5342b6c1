"""Tests for the teleportation protocol: layouts, ideal, noisy, Haar, OTOC, teleportation and entropies."""
import math
from fractions import Fraction

import numpy as np
import pytest

from HaydenPreskillScrambling.modules.circuits import (
    Circuit,
    IsingParams,
    TrotterSpec,
    YmParams,
    build_epr_prep,
    build_trotter_ising,
    build_trotter_ym,
    circuit_unitary,
)
from HaydenPreskillScrambling.modules.channels import run_noisy_circuit_density
from HaydenPreskillScrambling.modules.config import ISING_PARAMETER_SETS
from HaydenPreskillScrambling.modules.engine import (
    DenseUnitary,
    MixedState,
    PureState,
    RngStream,
    exact_unitary,
    haar_random_state,
    sample_haar_unitary,
)
from HaydenPreskillScrambling.modules.hamiltonian import ising_hamiltonian
from HaydenPreskillScrambling.modules.protocol import (
    HpResult,
    NoiseSpec,
    ProtocolLayout,
    averaged_otoc_mc,
    channel_time_series,
    decohered_diagnostics,
    exact_otoc_average,
    haar_baselines,
    haar_p_epr_exact,
    ideal_time_series,
    make_layout,
    protocol_circuits,
    run_haar_samples,
    run_hp_channel_exact,
    run_hp_ideal,
    run_hp_trajectories,
    run_state_teleportation,
    scrambling_entropies,
    trajectory_time_series,
)

from conftest import random_circuit

S2 = 1.0 / math.sqrt(2.0)
STABILIZER_STATES = [
    [1, 0], [0, 1], [S2, S2], [S2, -S2], [S2, 1j * S2], [S2, -1j * S2],
]


def chaotic_step(n: int, t: float = 0.5, M: int = 2) -> Circuit:
    return build_trotter_ising(IsingParams(n, -1.05, 0.5), TrotterSpec(t, M))


def ym_step(n: int, K: float = 2.0, t: float = 0.5, M: int = 1) -> Circuit:
    return build_trotter_ym(YmParams(n, K), TrotterSpec(t, M))


def window_mean(results, lo: float, hi: float, scale: float = 1.0) -> float:
    return float(np.mean([r.f_epr for r in results if lo - 1e-9 <= scale * r.t <= hi + 1e-9]))


class TestLayout:

    def test_dimensions(self):
        layout = make_layout(8, 1, 2)
        assert layout.n_total == 18
        assert (layout.d_A, layout.d_B, layout.d_C, layout.d_D) == (2, 128, 64, 4)

    def test_ising_default(self):
        layout = make_layout(8, 1, 2)
        assert layout.a_sites == [0]
        assert layout.d_sites == [6, 7]

    def test_ym_default_keeps_chain_ends_free(self):
        layout = make_layout(8, 1, 2, placement='ym_default')
        assert layout.a_sites == [1]
        assert layout.d_sites == [5, 6]

    def test_register_map(self):
        layout = make_layout(8, 1, 2)
        assert layout.r_qubits == [0]
        assert layout.ab(0) == 1
        assert layout.mirror(0) == 16
        assert layout.r_prime_qubits == [17]
        assert layout.dd_pairs == [(7, 10), (8, 9)]
        flat = [q for pair in layout.prep_pairs for q in pair]
        assert sorted(flat) == list(range(18))

    def test_explicit_sites(self):
        layout = make_layout(4, 1, 1, placement='explicit', a_sites=[2], d_sites=[2])
        assert layout.b_sites == [0, 1, 3]
        assert layout.c_sites == [0, 1, 3]

    @pytest.mark.parametrize("kwargs", [
        dict(N=4, N_A=1, N_D=1, placement='middle'),
        dict(N=2, N_A=1, N_D=1, placement='ym_default'),
        dict(N=4, N_A=1, N_D=1, placement='explicit'),
        dict(N=4, N_A=1, N_D=1, placement='explicit', a_sites=[4], d_sites=[0]),
        dict(N=4, N_A=0, N_D=1),
        dict(N=4, N_A=1, N_D=5),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            make_layout(**kwargs)

    def test_duplicate_sites(self):
        with pytest.raises(ValueError):
            ProtocolLayout(4, 2, 1, [1, 1], [3])


class TestIdeal:

    def test_identity(self, small_layout):
        result = run_hp_ideal(small_layout, Circuit(4))
        assert result.p_epr == pytest.approx(1.0)
        assert result.f_epr == pytest.approx(0.25)

    def test_identity_two_input_qubits(self):
        result = run_hp_ideal(make_layout(4, 2, 1), Circuit(4))
        assert result.p_epr == pytest.approx(1.0)
        assert result.f_epr == pytest.approx(1 / 16)

    @pytest.mark.parametrize("t", [0.3, 1.0, 2.5])
    def test_fidelity_probability_product(self, small_layout, t):
        result = run_hp_ideal(small_layout, chaotic_step(4, t, 10), t)
        assert result.f_epr * result.p_epr * small_layout.d_A ** 2 == pytest.approx(1.0, abs=1e-10)
        assert result.p_epr >= max(1 / small_layout.d_A ** 2, 1 / small_layout.d_D ** 2) - 1e-12
        assert result.t == t

    def test_identity_over_random_circuits(self, small_layout):
        bound = max(1 / small_layout.d_A ** 2, 1 / small_layout.d_D ** 2) - 1e-9
        for seed in range(50):
            result = run_hp_ideal(small_layout, random_circuit(4, 60, seed=seed))
            assert result.f_epr * result.p_epr * small_layout.d_A ** 2 == pytest.approx(1.0, abs=1e-9)
            assert result.p_epr >= bound

    @pytest.mark.parametrize("name", sorted(ISING_PARAMETER_SETS))
    def test_identity_over_parameter_sets(self, small_layout, name):
        h, m = ISING_PARAMETER_SETS[name]
        step = build_trotter_ising(IsingParams(4, h, m), TrotterSpec(0.1, 1))
        for result in ideal_time_series(small_layout, step, 30, 0.1, record=range(0, 31, 5)):
            assert result.f_epr * result.p_epr * 4 == pytest.approx(1.0, abs=1e-9)
            assert result.p_epr >= 0.25 - 1e-9

    def test_circuit_and_dense_agree(self, tiny_layout):
        u = random_circuit(3, 40, seed=5)
        by_circuit = run_hp_ideal(tiny_layout, u)
        by_matrix = run_hp_ideal(tiny_layout, DenseUnitary(circuit_unitary(u)))
        assert by_matrix.p_epr == pytest.approx(by_circuit.p_epr, abs=1e-12)
        assert by_matrix.f_epr == pytest.approx(by_circuit.f_epr, abs=1e-12)

    def test_time_series_matches_repeated_runs(self, small_layout):
        step = chaotic_step(4, 0.1, 1)
        series = ideal_time_series(small_layout, step, 3, 0.1)
        assert [r.t for r in series] == pytest.approx([0.0, 0.1, 0.2, 0.3])
        for k, result in enumerate(series):
            expected = run_hp_ideal(small_layout, step.repeat(k))
            assert result.p_epr == pytest.approx(expected.p_epr, abs=1e-12)
            assert result.f_epr == pytest.approx(expected.f_epr, abs=1e-12)

    def test_time_series_record(self, small_layout):
        series = ideal_time_series(small_layout, chaotic_step(4, 0.1, 1), 4, 0.1, record=[0, 4])
        assert [r.t for r in series] == pytest.approx([0.0, 0.4])
        with pytest.raises(ValueError):
            ideal_time_series(small_layout, chaotic_step(4, 0.1, 1), 2, 0.1, record=[3])

    def test_wrong_evolution_size(self, small_layout):
        with pytest.raises(ValueError):
            run_hp_ideal(small_layout, DenseUnitary.identity(8))
        with pytest.raises(ValueError):
            run_hp_ideal(small_layout, Circuit(5))


class TestTrajectories:

    def test_zero_noise_equals_ideal(self, small_layout):
        u = chaotic_step(4)
        ideal = run_hp_ideal(small_layout, u)
        noisy = run_hp_trajectories(small_layout, u, NoiseSpec(0.0, n_traj=3, n_bootstrap=10))
        assert noisy.p_epr == pytest.approx(ideal.p_epr, abs=1e-12)
        assert noisy.f_epr == pytest.approx(ideal.f_epr, abs=1e-12)
        assert noisy.p_err == pytest.approx(0.0, abs=1e-12)
        assert noisy.n_traj == 3

    def test_deterministic_under_seed(self, tiny_layout):
        u = chaotic_step(3)
        noise = NoiseSpec(0.05, n_traj=20, rng=RngStream(7), n_bootstrap=20)
        first = run_hp_trajectories(tiny_layout, u, noise)
        second = run_hp_trajectories(tiny_layout, u, noise)
        assert first.to_dict() == second.to_dict()

    def test_noise_lowers_success(self, tiny_layout):
        u = chaotic_step(3, 1.0, 4)
        ideal = run_hp_ideal(tiny_layout, u)
        noisy = run_hp_trajectories(tiny_layout, u, NoiseSpec(0.2, n_traj=200, rng=RngStream(3), n_bootstrap=50))
        assert noisy.p_epr * noisy.f_epr < ideal.p_epr * ideal.f_epr

    def test_time_series_length(self, tiny_layout):
        noise = NoiseSpec(0.01, n_traj=5, rng=RngStream(2), n_bootstrap=10)
        series = trajectory_time_series(tiny_layout, chaotic_step(3, 0.1, 1), 3, 0.1, noise)
        assert len(series) == 4
        assert series[0].t == 0.0

    def test_whole_unitary_scope_rejected(self, tiny_layout):
        with pytest.raises(ValueError):
            run_hp_trajectories(tiny_layout, chaotic_step(3), NoiseSpec(0.1, scope='whole_unitary', n_traj=2))


class TestChannelExact:

    @pytest.mark.parametrize("scope", ['all_cnots', 'evolution_only', 'whole_unitary'])
    def test_zero_noise_equals_ideal(self, tiny_layout, scope):
        u = chaotic_step(3)
        ideal = run_hp_ideal(tiny_layout, u)
        exact = run_hp_channel_exact(tiny_layout, u, NoiseSpec(0.0, scope=scope))
        assert exact.p_epr == pytest.approx(ideal.p_epr, abs=1e-10)
        assert exact.f_epr == pytest.approx(ideal.f_epr, abs=1e-10)

    def test_full_depolarization(self, tiny_layout):
        u = sample_haar_unitary(8, RngStream(4))
        result = run_hp_channel_exact(tiny_layout, u, NoiseSpec(1.0, scope='whole_unitary'))
        assert result.p_epr == pytest.approx(1 / tiny_layout.d_D ** 2, abs=1e-12)

    @pytest.mark.parametrize("p", [0.05, 0.3, 0.7])
    def test_whole_unitary_closed_form(self, tiny_layout, p):
        u = sample_haar_unitary(8, RngStream(9))
        ideal = run_hp_ideal(tiny_layout, u).p_epr
        result = run_hp_channel_exact(tiny_layout, u, NoiseSpec(p, scope='whole_unitary'))
        expected = (1 - p) ** 2 * ideal + (2 * p - p * p) / tiny_layout.d_D ** 2
        assert result.p_epr == pytest.approx(expected, abs=1e-12)

    def test_whole_unitary_monotone_in_noise(self, tiny_layout):
        u = sample_haar_unitary(8, RngStream(10))
        values = [run_hp_channel_exact(tiny_layout, u, NoiseSpec(p, scope='whole_unitary')).p_epr
                  for p in (0.0, 0.1, 0.4, 0.8)]
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("scope", ['evolution_only', 'whole_unitary'])
    def test_renyi_mutual_information_identity(self, tiny_layout, scope):
        result = run_hp_channel_exact(tiny_layout, chaotic_step(3, 1.0, 4), NoiseSpec(0.05, scope=scope))
        i2 = result.diagnostics['i2']
        assert tiny_layout.d_A ** 2 * result.f_epr == pytest.approx(2.0 ** i2, rel=1e-8)
        assert result.diagnostics['delta'] == pytest.approx(2.0 ** i2 * result.p_epr, rel=1e-12)

    def test_purity_relations(self, tiny_layout):
        layout = tiny_layout
        result = run_hp_channel_exact(layout, chaotic_step(3, 1.0, 4), NoiseSpec(0.05, scope='evolution_only'))
        d = result.diagnostics
        assert d['purity_b_d'] == pytest.approx(layout.d_D / layout.d_B * result.p_epr, rel=1e-8)
        assert d['purity_r_b_d'] == pytest.approx(
            layout.d_A * layout.d_D / layout.d_B * result.p_epr * result.f_epr, rel=1e-8)

    @pytest.mark.parametrize("model", ["ising", "ym"])
    def test_decohered_identities_on_four_sites(self, small_layout, model):
        u = chaotic_step(4, 1.0, 4) if model == "ising" else ym_step(4, 2.0, 1.0, 2)
        ideal = run_hp_ideal(small_layout, u).p_epr
        for p in (0.0, 0.01, 0.05, 0.2, 1.0):
            whole = run_hp_channel_exact(small_layout, u, NoiseSpec(p, scope="whole_unitary"))
            expected = (1 - p) ** 2 * ideal + (2 * p - p * p) / small_layout.d_D ** 2
            assert whole.p_epr == pytest.approx(expected, abs=1e-10)
            for result in (whole, run_hp_channel_exact(small_layout, u, NoiseSpec(p, scope="evolution_only"))):
                assert small_layout.d_A ** 2 * result.f_epr == pytest.approx(2.0 ** result.diagnostics["i2"], abs=1e-9)

    def test_diagnostic_keys(self, tiny_layout):
        result = run_hp_channel_exact(tiny_layout, chaotic_step(3), NoiseSpec(0.01))
        assert set(result.diagnostics) == {
            's2_r', 's2_b_d', 's2_r_b_d', 'i2', 'delta', 'purity_b_d', 'purity_r_b_d'}
        assert result.diagnostics['s2_r'] == pytest.approx(1.0, abs=1e-10)

    def test_all_cnots_diagnostics_include_preparation_noise(self, tiny_layout):
        u = chaotic_step(3, 1.0, 4)
        result = run_hp_channel_exact(tiny_layout, u, NoiseSpec(0.05))
        prep = build_epr_prep(tiny_layout.prep_pairs, tiny_layout.n_total)
        rho = run_noisy_circuit_density(MixedState.from_pure(PureState.zero(tiny_layout.n_total)), prep, 0.05)
        rho = run_noisy_circuit_density(rho, protocol_circuits(tiny_layout, u)[0], 0.05)
        expected = decohered_diagnostics(rho, tiny_layout, result.p_epr)
        assert result.diagnostics == pytest.approx(expected, abs=1e-12)

    def test_time_series_points(self, tiny_layout):
        series = channel_time_series(tiny_layout, chaotic_step(3, 0.1, 1), 2, 0.1, NoiseSpec(0.01))
        assert [r.t for r in series] == pytest.approx([0.0, 0.1, 0.2])

    def test_dense_unitary_needs_whole_unitary_scope(self, tiny_layout):
        with pytest.raises(ValueError):
            run_hp_channel_exact(tiny_layout, DenseUnitary.identity(8), NoiseSpec(0.1, scope='all_cnots'))

    def test_size_limit(self):
        layout = make_layout(6, 1, 1)
        with pytest.raises(ValueError):
            run_hp_channel_exact(layout, Circuit(6), NoiseSpec(0.1))


class TestHaar:

    def test_exact_fraction(self):
        assert haar_p_epr_exact(2, 128, 64, 4) == Fraction(19455, 65535)

    def test_baselines(self):
        baselines = haar_baselines(2, 128, 64, 4)
        assert baselines.p_haar_exact == pytest.approx(19455 / 65535)
        assert baselines.p_haar_approx == pytest.approx(0.296875)
        assert baselines.f_haar_exact == pytest.approx(65535 / 77820, abs=1e-12)
        assert baselines.f_haar_approx == pytest.approx(0.8)
        assert baselines.purity_rd_exact == pytest.approx(0.125086, abs=1e-6)
        assert baselines.purity_rd_approx == pytest.approx(0.125122, abs=1e-6)

    def test_probability_lower_bound(self):
        assert float(haar_p_epr_exact(2, 4, 4, 2)) >= 0.25

    def test_monte_carlo_mean(self, tiny_layout):
        p, f = run_haar_samples(tiny_layout, 200, RngStream(3))
        exact = float(haar_p_epr_exact(tiny_layout.d_A, tiny_layout.d_B, tiny_layout.d_C, tiny_layout.d_D))
        assert abs(p.mean() - exact) < 5 * p.std(ddof=1) / np.sqrt(p.size)
        np.testing.assert_allclose(f * p * tiny_layout.d_A ** 2, 1.0, atol=1e-10)

    @pytest.mark.parametrize("dims", [(3, 4, 4, 3), (2, 4, 4, 4), (0, 1, 1, 0)])
    def test_invalid_dimensions(self, dims):
        with pytest.raises(ValueError):
            haar_p_epr_exact(*dims)


class TestOtoc:

    def test_identity(self, small_layout):
        mean, err = averaged_otoc_mc(small_layout, Circuit(4), 50, RngStream(1))
        assert mean == pytest.approx(1.0)
        assert err == pytest.approx(0.0, abs=1e-12)

    def test_dense_and_statevector_agree(self, small_layout):
        u = random_circuit(4, 50, seed=12)
        dense = averaged_otoc_mc(small_layout, u, 40, RngStream(8), method='dense')
        state = averaged_otoc_mc(small_layout, u, 40, RngStream(8), method='statevector')
        assert dense[0] == pytest.approx(state[0], abs=1e-10)
        assert dense[1] == pytest.approx(state[1], abs=1e-10)

    def test_circuits_default_to_statevector(self, small_layout):
        u = random_circuit(4, 50, seed=12)
        default = averaged_otoc_mc(small_layout, u, 40, RngStream(8))
        assert default == averaged_otoc_mc(small_layout, u, 40, RngStream(8), method='statevector')
        matrix = DenseUnitary(circuit_unitary(u))
        assert averaged_otoc_mc(small_layout, matrix, 40, RngStream(8)) == \
            averaged_otoc_mc(small_layout, matrix, 40, RngStream(8), method='dense')

    def test_exact_average_equals_success_probability(self, small_layout):
        u = chaotic_step(4, 1.5, 6)
        assert exact_otoc_average(small_layout, u) == pytest.approx(run_hp_ideal(small_layout, u).p_epr, abs=1e-10)

    def test_unknown_method(self, small_layout):
        with pytest.raises(ValueError):
            averaged_otoc_mc(small_layout, Circuit(4), 2, RngStream(1), method='tensor')


class TestTeleportation:

    def test_identity(self, tiny_layout):
        p, f = run_state_teleportation(tiny_layout, Circuit(3), np.array([1.0, 0.0]))
        assert p == pytest.approx(1.0)
        assert f == pytest.approx(0.5)

    def test_stabilizer_average(self, small_layout):
        u = chaotic_step(4, 2.0, 8)
        ideal = run_hp_ideal(small_layout, u).p_epr
        d_a = small_layout.d_A
        products = [np.prod(run_state_teleportation(small_layout, u, np.array(psi))) for psi in STABILIZER_STATES]
        assert np.mean(products) == pytest.approx((ideal + 1 / d_a) / (d_a + 1), abs=1e-10)

    def test_wrong_dimension(self, tiny_layout):
        with pytest.raises(ValueError):
            run_state_teleportation(tiny_layout, Circuit(3), np.ones(4))


class TestEntropies:

    def test_identity(self, small_layout):
        ent = scrambling_entropies(small_layout, Circuit(4))
        assert ent.i_r_bd == pytest.approx(0.0, abs=1e-9)
        assert ent.i_r_c == pytest.approx(2.0, abs=1e-9)
        assert ent.i_r_d == pytest.approx(0.0, abs=1e-9)
        assert ent.i3_rcd == pytest.approx(0.0, abs=1e-9)

    def test_renyi_mutual_information_matches_fidelity(self, small_layout):
        u = chaotic_step(4, 1.0, 5)
        ent = scrambling_entropies(small_layout, u)
        f = run_hp_ideal(small_layout, u).f_epr
        assert small_layout.d_A ** 2 * f == pytest.approx(2.0 ** ent.i2_r_bd, rel=1e-8)

    def test_bounds(self, small_layout):
        ent = scrambling_entropies(small_layout, random_circuit(4, 60, seed=4))
        for value in (ent.i_r_bd, ent.i_r_c, ent.i_r_d):
            assert -1e-9 <= value <= 2 * small_layout.N_A + 1e-9


class TestResults:

    def test_to_dict_flattens_diagnostics(self):
        result = HpResult(t=0.5, p_epr=0.3, f_epr=0.8, diagnostics={'i2': 1.2}, flags=['a', 'b'])
        row = result.to_dict()
        assert row['i2'] == 1.2
        assert row['flags'] == 'a;b'
        assert 'diagnostics' not in row

    @pytest.mark.parametrize("kwargs", [dict(p=1.5), dict(p=-0.1), dict(p=0.1, scope='gates'),
                                        dict(p=0.1, n_traj=0)])
    def test_noise_validation(self, kwargs):
        with pytest.raises(ValueError):
            NoiseSpec(**kwargs)


@pytest.mark.slow
def test_trajectories_match_channel_exact(small_layout):
    u = chaotic_step(4, 1.0, 10)
    exact = run_hp_channel_exact(small_layout, u, NoiseSpec(0.01))
    sampled = run_hp_trajectories(small_layout, u, NoiseSpec(0.01, n_traj=10_000, rng=RngStream(21)))
    assert abs(sampled.p_epr - exact.p_epr) < 3 * sampled.p_err
    assert abs(sampled.f_epr - exact.f_epr) < 3 * sampled.f_err


@pytest.mark.slow
def test_otoc_monte_carlo_matches_exact_average(small_layout):
    u = chaotic_step(4, 2.0, 8)
    mean, err = averaged_otoc_mc(small_layout, u, 4000, RngStream(5))
    assert abs(mean - exact_otoc_average(small_layout, u)) < 3 * err


@pytest.mark.slow
def test_haar_sampled_mean_matches_closed_form():
    layout = make_layout(8, 1, 2)
    p, f = run_haar_samples(layout, 200, RngStream(17))
    baselines = haar_baselines(2, 128, 64, 4)
    assert abs(p.mean() - baselines.p_haar_exact) < 3 * p.std(ddof=1) / np.sqrt(p.size)
    assert abs(f.mean() - baselines.f_haar_exact) < 3 * f.std(ddof=1) / np.sqrt(f.size)


@pytest.mark.slow
def test_chaotic_ising_separates_from_integrable():
    layout = make_layout(8, 1, 2)
    late = {}
    for name, (h, m) in ISING_PARAMETER_SETS.items():
        step = build_trotter_ising(IsingParams(8, h, m), TrotterSpec(0.1, 1))
        series = ideal_time_series(layout, step, 400, 0.1, record=range(200, 401, 10))
        late[name] = window_mean(series, 20.0, 40.0)
    assert late['chaotic'] > late['critical'] > late['classical']
    assert late['chaotic'] == pytest.approx(0.8421, abs=0.1)


@pytest.mark.slow
def test_noise_suppresses_success_but_not_chaotic_recovery():
    layout = make_layout(8, 1, 2)
    noise = NoiseSpec(0.001, n_traj=50, rng=RngStream(33), n_bootstrap=20)
    fidelities = {}
    for name in ('chaotic', 'classical'):
        h, m = ISING_PARAMETER_SETS[name]
        step = build_trotter_ising(IsingParams(8, h, m), TrotterSpec(0.1, 1))
        series = trajectory_time_series(layout, step, 100, 0.1, noise, record=range(0, 101, 10))
        assert series[-1].p_epr < series[0].p_epr
        fidelities[name] = np.array([r.f_epr for r in series])
    assert np.nanmax(fidelities['chaotic'] - fidelities['classical']) > 0.2


@pytest.mark.slow
def test_noise_suppresses_success_but_not_yang_mills_recovery():
    layout = make_layout(8, 1, 2, placement='ym_default')
    h, m = ISING_PARAMETER_SETS['classical']
    steps = {'ym': ym_step(8, 2.0), 'classical': build_trotter_ising(IsingParams(8, h, m), TrotterSpec(0.5, 1))}
    fidelities = {}
    for name, step in steps.items():
        noise = NoiseSpec(0.001, n_traj=50, rng=RngStream(34), n_bootstrap=20)
        series = trajectory_time_series(layout, step, 20, 0.5, noise)
        assert series[-1].p_epr < series[0].p_epr
        fidelities[name] = np.array([r.f_epr for r in series])
    assert np.nanmax(fidelities['ym'] - fidelities['classical']) > 0.2


@pytest.mark.slow
def test_trotter_error_is_first_order_in_success_probability():
    layout = make_layout(6, 1, 1)
    exact = run_hp_ideal(layout, exact_unitary(ising_hamiltonian(6, -1.05, 0.5), 2.0)).p_epr
    errors = [abs(run_hp_ideal(layout, chaotic_step(6, 2.0, M)).p_epr - exact) for M in (20, 40, 80)]
    for coarse, fine in zip(errors, errors[1:]):
        assert 1.5 <= coarse / fine <= 2.5


@pytest.mark.slow
def test_haar_input_states_follow_design_average(small_layout):
    u = chaotic_step(4, 2.0, 20)
    ideal = run_hp_ideal(small_layout, u).p_epr
    stream = RngStream(41)
    products = np.array([np.prod(run_state_teleportation(small_layout, u, haar_random_state(1, stream.child(s))))
                         for s in range(500)])
    predicted = (ideal + 1 / small_layout.d_A) / (small_layout.d_A + 1)
    assert abs(products.mean() - predicted) < 3 * products.std(ddof=1) / np.sqrt(products.size) + 1e-12


@pytest.mark.slow
@pytest.mark.parametrize("t", [0.5, 2.0, 5.0])
def test_otoc_average_tracks_success_probability(t):
    layout = make_layout(8, 1, 2)
    u = chaotic_step(8, t, int(round(t / 0.1)))
    mean, err = averaged_otoc_mc(layout, u, 2000, RngStream(int(10 * t)), method='dense')
    assert abs(mean - run_hp_ideal(layout, u).p_epr) < 3 * err + 1e-9


@pytest.mark.slow
def test_yang_mills_late_time_and_rescaled_overlap():
    layout = make_layout(8, 1, 2, placement='ym_default')
    f_haar = haar_baselines(2, 128, 64, 4).f_haar_exact
    strong = ideal_time_series(layout, ym_step(8, 2.0), 100, 0.5)
    weak = ideal_time_series(layout, ym_step(8, 0.5), 80, 0.5, record=range(0, 81, 4))
    assert window_mean(strong, 50.0, 100.0, scale=2.0) == pytest.approx(f_haar, abs=0.15)
    strong_by_kt = {int(round(2.0 * r.t)): r.f_epr for r in strong}
    for r in weak:
        kt = int(round(0.5 * r.t))
        assert abs(r.f_epr - strong_by_kt[kt]) < 0.1
