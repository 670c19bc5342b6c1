"""Hayden-Preskill teleportation protocol: layout, ideal and noisy runs, Haar analytics and diagnostics.

Global qubit order is [R | AB | A'B' | R'] with A'B' the site-wise mirror of
AB, so system site k sits on qubit N_A + k and its mirror on N_A + 2N - 1 - k.
"""
import itertools
import logging
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from .channels import depolarize, run_noisy_circuit_density
from .circuits import (
    Circuit,
    build_epr_measure,
    build_epr_prep,
    circuit_unitary,
    conjugate_circuit,
    contract_epr_pairs,
    epr_projector_overlap,
    inverse_circuit,
    relabel_circuit,
)
from .config import (
    DEFAULT_BOOTSTRAP,
    DEFAULT_HAAR_SAMPLES,
    DEFAULT_N_TRAJ,
    DEFAULT_SEED,
    MAX_DENSITY_QUBITS,
    MAX_EXACT_QUBITS,
    NOISE_SCOPES,
    PROJECTION_THRESHOLD,
)
from .engine import (
    PAULI_MATRICES,
    DenseUnitary,
    MixedState,
    PureState,
    RngStream,
    apply_dense_unitary,
    apply_gate,
    apply_pauli,
    as_generator,
    entropies,
    reduced_density,
    run_circuit,
    sample_haar_unitary,
)

logger = logging.getLogger(__name__)

Evolution = Union[Circuit, DenseUnitary]
_PAULI_PAIRS = [a + b for a in 'IXYZ' for b in 'IXYZ']


class ProjectionImpossibleError(RuntimeError):
    """Raised when the DD' projection probability is numerically zero."""


@dataclass
class ProtocolLayout:
    """Register index map of the protocol.

    Attributes:
        N: system qubits
        N_A: input qubits (and reference R, R' sizes)
        N_D: output diagnostic qubits
        a_sites: system sites receiving the input A
        d_sites: system sites measured as D
        placement: name of the placement rule that produced the sites
    """
    N: int
    N_A: int
    N_D: int
    a_sites: List[int]
    d_sites: List[int]
    placement: str = 'explicit'

    def __post_init__(self):
        self.a_sites = [int(s) for s in self.a_sites]
        self.d_sites = [int(s) for s in self.d_sites]
        if not 1 <= self.N_A <= self.N or not 1 <= self.N_D <= self.N:
            raise ValueError(f"Need 1 <= N_A, N_D <= N, got N={self.N}, N_A={self.N_A}, N_D={self.N_D}")
        for name, sites, size in (('a_sites', self.a_sites, self.N_A), ('d_sites', self.d_sites, self.N_D)):
            if len(sites) != size or len(set(sites)) != size:
                raise ValueError(f"{name} must list {size} distinct sites, got {sites}")
            if any(not 0 <= s < self.N for s in sites):
                raise ValueError(f"{name} {sites} out of range for N={self.N}")

    @property
    def n_total(self) -> int:
        return 2 * self.N + 2 * self.N_A

    @property
    def d_A(self) -> int:
        return 2 ** self.N_A

    @property
    def d_B(self) -> int:
        return 2 ** (self.N - self.N_A)

    @property
    def d_C(self) -> int:
        return 2 ** (self.N - self.N_D)

    @property
    def d_D(self) -> int:
        return 2 ** self.N_D

    @property
    def b_sites(self) -> List[int]:
        return [k for k in range(self.N) if k not in self.a_sites]

    @property
    def c_sites(self) -> List[int]:
        return [k for k in range(self.N) if k not in self.d_sites]

    @property
    def r_qubits(self) -> List[int]:
        return list(range(self.N_A))

    @property
    def r_prime_qubits(self) -> List[int]:
        return [self.N_A + 2 * self.N + a for a in range(self.N_A)]

    def ab(self, k: int) -> int:
        return self.N_A + k

    def mirror(self, k: int) -> int:
        return self.N_A + 2 * self.N - 1 - k

    @property
    def ab_qubits(self) -> List[int]:
        return [self.ab(k) for k in range(self.N)]

    @property
    def mirror_qubits(self) -> List[int]:
        return [self.mirror(k) for k in range(self.N)]

    @property
    def prep_pairs(self) -> List[Tuple[int, int]]:
        """EPR pairs R-A, B-B' and A'-R'."""
        pairs = [(r, self.ab(a)) for r, a in zip(self.r_qubits, self.a_sites)]
        pairs += [(self.ab(b), self.mirror(b)) for b in self.b_sites]
        pairs += [(self.mirror(a), rp) for a, rp in zip(self.a_sites, self.r_prime_qubits)]
        return pairs

    @property
    def dd_pairs(self) -> List[Tuple[int, int]]:
        return [(self.ab(d), self.mirror(d)) for d in self.d_sites]

    @property
    def rr_pairs(self) -> List[Tuple[int, int]]:
        return list(zip(self.r_qubits, self.r_prime_qubits))

    def to_dict(self) -> Dict:
        return {'N': self.N, 'N_A': self.N_A, 'N_D': self.N_D, 'a_sites': list(self.a_sites),
                'd_sites': list(self.d_sites), 'placement': self.placement}


def make_layout(N: int, N_A: int, N_D: int, placement: str = 'ising_default',
                a_sites: Optional[Sequence[int]] = None,
                d_sites: Optional[Sequence[int]] = None) -> ProtocolLayout:
    """Choose the A and D sites.

    ising_default puts A on the first N_A sites and D on the last N_D sites.
    ym_default keeps both away from the chain ends: A starts at site 1 and D
    ends at site N-2. explicit echoes ``a_sites`` and ``d_sites``.

    Raises:
        ValueError: for unknown placements or sites out of range
    """
    if placement == 'ising_default':
        a = list(range(N_A))
        d = list(range(N - N_D, N))
    elif placement == 'ym_default':
        if N_A + 2 > N or N_D + 2 > N:
            raise ValueError(f"ym_default needs N >= max(N_A, N_D) + 2, got N={N}")
        a = list(range(1, N_A + 1))
        d = list(range(N - 1 - N_D, N - 1))
    elif placement == 'explicit':
        if a_sites is None or d_sites is None:
            raise ValueError("explicit placement needs a_sites and d_sites")
        a, d = list(a_sites), list(d_sites)
    else:
        raise ValueError(f"Unknown placement: {placement}")
    return ProtocolLayout(N, N_A, N_D, a, d, placement)


@dataclass
class HpResult:
    """Outcome of one protocol evaluation."""
    t: float
    p_epr: float
    f_epr: float
    p_err: float = 0.0
    f_err: float = 0.0
    n_traj: int = 0
    diagnostics: Optional[Dict[str, float]] = None
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        row = asdict(self)
        diagnostics = row.pop('diagnostics') or {}
        row['flags'] = ';'.join(self.flags)
        row.update(diagnostics)
        return row


@dataclass(frozen=True)
class NoiseSpec:
    """Depolarizing noise settings."""
    p: float
    scope: str = 'all_cnots'
    n_traj: int = DEFAULT_N_TRAJ
    rng: RngStream = RngStream(DEFAULT_SEED)
    n_bootstrap: int = DEFAULT_BOOTSTRAP

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"Error probability must lie in [0, 1], got {self.p}")
        if self.scope not in NOISE_SCOPES:
            raise ValueError(f"Unknown noise scope {self.scope!r}; expected one of {NOISE_SCOPES}")
        if self.n_traj < 1:
            raise ValueError(f"Need at least one trajectory, got {self.n_traj}")


@dataclass(frozen=True)
class HaarBaselines:
    p_haar_exact: float
    p_haar_approx: float
    f_haar_exact: float
    f_haar_approx: float
    purity_rd_exact: float
    purity_rd_approx: float


@dataclass(frozen=True)
class ScramblingEntropies:
    """Mutual informations (bits) of the protocol state; i2_* are Renyi-2 versions."""
    i2_r_bd: float
    i_r_bd: float
    i_r_c: float
    i_r_d: float
    i3_rcd: float
    i2_r_c: float
    i2_r_d: float


# -- evolution helpers -------------------------------------------------------

def protocol_circuits(layout: ProtocolLayout, u: Circuit) -> Tuple[Circuit, Circuit]:
    """U relabelled onto AB and conj(U) relabelled onto the mirrored A'B'."""
    if u.n_qubits > layout.N:
        raise ValueError(f"Evolution acts on {u.n_qubits} qubits, layout has N={layout.N}")
    forward = relabel_circuit(u, dict(enumerate(layout.ab_qubits)), layout.n_total)
    backward = relabel_circuit(conjugate_circuit(u), dict(enumerate(layout.mirror_qubits)), layout.n_total)
    return forward, backward


def _as_dense(u: Evolution) -> DenseUnitary:
    if isinstance(u, DenseUnitary):
        return u
    if u.n_qubits > MAX_EXACT_QUBITS:
        raise ValueError(f"Dense evolution limited to {MAX_EXACT_QUBITS} qubits")
    return DenseUnitary(circuit_unitary(u), check=False)


def _apply_evolution(state: PureState, layout: ProtocolLayout, u: Evolution) -> PureState:
    if isinstance(u, DenseUnitary):
        if u.dim != 2 ** layout.N:
            raise ValueError(f"Unitary of dimension {u.dim} does not act on N={layout.N} qubits")
        apply_dense_unitary(state, u, layout.ab_qubits)
        apply_dense_unitary(state, u.conj(), layout.mirror_qubits)
        return state
    forward, backward = protocol_circuits(layout, u)
    run_circuit(state, forward)
    run_circuit(state, backward)
    return state


def prepare_protocol_state(layout: ProtocolLayout) -> PureState:
    """|EPR>_RA ⊗ |EPR>_BB' ⊗ |EPR>_A'R' on the full register."""
    state = PureState.zero(layout.n_total)
    return run_circuit(state, build_epr_prep(layout.prep_pairs, layout.n_total))


def _ideal_expectations(state: PureState, layout: ProtocolLayout) -> Tuple[float, float]:
    """(<Pi_DD'>, <Pi_RR' Pi_DD'>) by direct pair contraction."""
    tensor = state.as_tensor()
    c_dd = contract_epr_pairs(tensor, layout.dd_pairs)
    c_all = contract_epr_pairs(tensor, layout.dd_pairs + layout.rr_pairs)
    return float(np.vdot(c_dd, c_dd).real), float(np.vdot(c_all, c_all).real)


def _recorded_steps(n_steps: int, record: Optional[Iterable[int]]) -> List[int]:
    if n_steps < 0:
        raise ValueError(f"Step count must be non-negative, got {n_steps}")
    if record is None:
        return list(range(n_steps + 1))
    steps = sorted(set(int(k) for k in record))
    if steps and (steps[0] < 0 or steps[-1] > n_steps):
        raise ValueError(f"Recorded steps {steps} outside 0..{n_steps}")
    return steps


def _result_from_expectations(t: float, p: float, joint: float) -> HpResult:
    if p < PROJECTION_THRESHOLD:
        logger.error(f"DD' projection impossible at t={t}: probability {p:.3e}")
        raise ProjectionImpossibleError(f"DD' projection probability {p:.3e} below threshold")
    return HpResult(t=t, p_epr=p, f_epr=joint / p)


# -- ideal runs --------------------------------------------------------------

def run_hp_ideal(layout: ProtocolLayout, u_circuit: Evolution, t: float = 0.0) -> HpResult:
    """Noiseless protocol: P_EPR on DD' and F_EPR on RR' after the DD' projection.

    Raises:
        ProjectionImpossibleError: if P_EPR < 1e-14
    """
    state = _apply_evolution(prepare_protocol_state(layout), layout, u_circuit)
    p, joint = _ideal_expectations(state, layout)
    return _result_from_expectations(t, p, joint)


def ideal_time_series(layout: ProtocolLayout, step: Evolution, n_steps: int, dt: float,
                      record: Optional[Iterable[int]] = None) -> List[HpResult]:
    """Ideal protocol at t = k dt for k = 0..n_steps, evolving one step at a time.

    Args:
        record: step counts k to report (default: every step)
    """
    recorded = set(_recorded_steps(n_steps, record))
    state = prepare_protocol_state(layout)
    results = []
    for k in range(n_steps + 1):
        if k > 0:
            _apply_evolution(state, layout, step)
        if k in recorded:
            p, joint = _ideal_expectations(state, layout)
            results.append(_result_from_expectations(k * dt, p, joint))
    logger.debug(f"Ideal time series: {len(results)} points up to t={n_steps * dt:g}")
    return results


# -- trajectories ------------------------------------------------------------

def _run_noisy_trajectory(state: PureState, circuit: Circuit, p: float, gen: np.random.Generator) -> None:
    """Run ``circuit``; each CNOT becomes a uniform two-qubit Pauli with probability p."""
    if p == 0.0:
        run_circuit(state, circuit)
        return
    for gate in circuit.gates:
        if gate.kind == 'CNOT' and gen.random() < p:
            letters = _PAULI_PAIRS[gen.integers(16)]
            apply_pauli(state, gate.qubits[0], letters[0])
            apply_pauli(state, gate.qubits[1], letters[1])
        else:
            apply_gate(state, gate)


def _zero_probability(state: PureState, qubits: Sequence[int]) -> float:
    index = [slice(None)] * state.n_qubits
    for q in qubits:
        index[q] = 0
    block = state.as_tensor()[tuple(index)]
    return float(np.vdot(block, block).real)


def _measured_expectations(state: PureState, layout: ProtocolLayout, p: float,
                           gen: np.random.Generator) -> Tuple[float, float]:
    """Expectations through the (noisy) EPR measurement circuit: all-zero outcome probabilities."""
    pairs = layout.dd_pairs + layout.rr_pairs
    measured = state.copy()
    _run_noisy_trajectory(measured, build_epr_measure(pairs, layout.n_total), p, gen)
    dd_bits = [q for pair in layout.dd_pairs for q in pair]
    all_bits = [q for pair in pairs for q in pair]
    return _zero_probability(measured, dd_bits), _zero_probability(measured, all_bits)


def _bootstrap_errors(p_samples: np.ndarray, j_samples: np.ndarray, n_boot: int,
                      gen: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Bootstrap standard errors of mean(P) and mean(J)/mean(P) per time point."""
    n = p_samples.shape[0]
    if n < 2 or n_boot < 2:
        return np.zeros(p_samples.shape[1]), np.zeros(p_samples.shape[1])
    p_boot = np.empty((n_boot, p_samples.shape[1]))
    f_boot = np.empty_like(p_boot)
    for b in range(n_boot):
        idx = gen.integers(0, n, size=n)
        p_mean = p_samples[idx].mean(axis=0)
        j_mean = j_samples[idx].mean(axis=0)
        p_boot[b] = p_mean
        with np.errstate(divide='ignore', invalid='ignore'):
            f_boot[b] = np.where(p_mean > 0, j_mean / p_mean, np.nan)
    return p_boot.std(axis=0, ddof=1), np.nanstd(f_boot, axis=0, ddof=1)


def _trajectory_results(times: Sequence[float], p_samples: np.ndarray, j_samples: np.ndarray,
                        noise: NoiseSpec) -> List[HpResult]:
    p_err, f_err = _bootstrap_errors(p_samples, j_samples, noise.n_bootstrap, noise.rng.child(2).generator())
    results = []
    for k, t in enumerate(times):
        p_mean = float(p_samples[:, k].mean())
        j_mean = float(j_samples[:, k].mean())
        result = HpResult(t=t, p_epr=p_mean, f_epr=float('nan'), p_err=float(p_err[k]),
                          f_err=float(f_err[k]), n_traj=noise.n_traj)
        if p_mean < max(PROJECTION_THRESHOLD, 3.0 * result.p_err):
            logger.warning(f"F_EPR denominator consistent with zero at t={t}: P={p_mean:.3e}")
            result.flags.append('zero_denominator')
        else:
            result.f_epr = j_mean / p_mean
        results.append(result)
    return results


def trajectory_time_series(layout: ProtocolLayout, step: Circuit, n_steps: int, dt: float,
                           noise: NoiseSpec, record: Optional[Iterable[int]] = None,
                           progress: bool = False) -> List[HpResult]:
    """Noisy protocol by quantum trajectories at t = k dt, k = 0..n_steps.

    Each trajectory keeps one noise realization across time: the circuit for
    time t is a prefix of the circuit for any later time.

    Raises:
        ValueError: for the whole_unitary scope, which has no per-gate unravelling here
    """
    if noise.scope not in ('all_cnots', 'evolution_only'):
        raise ValueError(f"Trajectories support all_cnots and evolution_only, got {noise.scope}")
    forward, backward = protocol_circuits(layout, step)
    prep = build_epr_prep(layout.prep_pairs, layout.n_total)
    edge_p = noise.p if noise.scope == 'all_cnots' else 0.0
    recorded = _recorded_steps(n_steps, record)
    recorded_set = set(recorded)
    p_samples = np.empty((noise.n_traj, len(recorded)))
    j_samples = np.empty_like(p_samples)
    traj_stream = noise.rng.child(1)
    for n in tqdm(range(noise.n_traj), disable=not progress, desc='trajectories'):
        gen = traj_stream.child(n).generator()
        state = PureState.zero(layout.n_total)
        _run_noisy_trajectory(state, prep, edge_p, gen)
        col = 0
        for k in range(n_steps + 1):
            if k > 0:
                _run_noisy_trajectory(state, forward, noise.p, gen)
                _run_noisy_trajectory(state, backward, noise.p, gen)
            if k in recorded_set:
                if edge_p > 0.0:
                    p_samples[n, col], j_samples[n, col] = _measured_expectations(state, layout, edge_p, gen)
                else:
                    p_samples[n, col], j_samples[n, col] = _ideal_expectations(state, layout)
                col += 1
        if n and n % 1000 == 0:
            logger.debug(f"Finished {n}/{noise.n_traj} trajectories")
    return _trajectory_results([k * dt for k in recorded], p_samples, j_samples, noise)


def run_hp_trajectories(layout: ProtocolLayout, u_circuit: Circuit, noise: NoiseSpec,
                        t: float = 0.0) -> HpResult:
    """Trajectory estimate of the noisy P_EPR and F_EPR (ratio of means, bootstrap errors)."""
    result = trajectory_time_series(layout, u_circuit, 1, 1.0, noise)[-1]
    result.t = t
    return result


# -- exact channel evolution -------------------------------------------------

def _projector_expectation(rho: MixedState, pairs: Sequence[Tuple[int, int]]) -> float:
    """Tr[Pi rho] for the product of EPR projectors on ``pairs``."""
    n = rho.n_qubits
    doubled = list(pairs) + [(a + n, b + n) for a, b in pairs]
    reduced = contract_epr_pairs(rho.matrix.reshape((2,) * (2 * n)), doubled)
    side = 1 << (n - 2 * len(pairs))
    return float(np.trace(reduced.reshape(side, side)).real)


def _density_expectations(rho: MixedState, layout: ProtocolLayout, edge_p: float) -> Tuple[float, float]:
    if edge_p == 0.0:
        return (_projector_expectation(rho, layout.dd_pairs),
                _projector_expectation(rho, layout.dd_pairs + layout.rr_pairs))
    pairs = layout.dd_pairs + layout.rr_pairs
    measured = run_noisy_circuit_density(rho, build_epr_measure(pairs, layout.n_total), edge_p)
    diag = np.real(np.diag(measured.matrix)).reshape((2,) * layout.n_total)

    def zero_mass(qubits):
        index = [slice(None)] * layout.n_total
        for q in qubits:
            index[q] = 0
        return float(diag[tuple(index)].sum())

    return (zero_mass([q for pair in layout.dd_pairs for q in pair]),
            zero_mass([q for pair in pairs for q in pair]))


def decohered_diagnostics(rho_u: MixedState, layout: ProtocolLayout, p_epr: float) -> Dict[str, float]:
    """Renyi-2 diagnostics of the state after the (noisy) EPR preparation and U on AB, A'B' untouched."""
    r = layout.r_qubits
    b_prime_d = [layout.mirror(b) for b in layout.b_sites] + [layout.ab(d) for d in layout.d_sites]
    purity_r = rho_u.partial_trace(r).purity()
    purity_bd = rho_u.partial_trace(b_prime_d).purity()
    purity_rbd = rho_u.partial_trace(r + b_prime_d).purity()
    s2_r, s2_bd, s2_rbd = (-np.log2(x) for x in (purity_r, purity_bd, purity_rbd))
    i2 = float(s2_r + s2_bd - s2_rbd)
    return {
        's2_r': float(s2_r), 's2_b_d': float(s2_bd), 's2_r_b_d': float(s2_rbd), 'i2': i2,
        'delta': float(2.0 ** i2 * p_epr), 'purity_b_d': purity_bd, 'purity_r_b_d': purity_rbd,
    }


def _check_density_size(layout: ProtocolLayout) -> None:
    if layout.n_total > MAX_DENSITY_QUBITS:
        raise ValueError(f"Channel-exact runs limited to {MAX_DENSITY_QUBITS} qubits, layout needs {layout.n_total}")


def _depolarized_evolution(rho: MixedState, layout: ProtocolLayout, u: DenseUnitary, p: float,
                           backward: bool) -> MixedState:
    """U on AB followed by whole-register depolarizing (conj(U) on A'B' when ``backward``)."""
    targets = layout.mirror_qubits if backward else layout.ab_qubits
    rho = rho.apply_unitary(u.conj() if backward else u, targets)
    return depolarize(rho, targets, p)


def channel_time_series(layout: ProtocolLayout, step: Evolution, n_steps: int, dt: float,
                        noise: NoiseSpec, record: Optional[Iterable[int]] = None) -> List[HpResult]:
    """Exact density-matrix evolution of the noisy protocol at t = k dt, with diagnostics.

    whole_unitary depolarizes once per U(t) = step^k, so each point starts
    from the fresh EPR state; per-CNOT scopes evolve incrementally.
    """
    _check_density_size(layout)
    edge_p = noise.p if noise.scope == 'all_cnots' else 0.0
    prep_pure = prepare_protocol_state(layout)
    results = []
    recorded = set(_recorded_steps(n_steps, record))
    if noise.scope == 'whole_unitary':
        step_dense = _as_dense(step)
        u_k = DenseUnitary.identity(step_dense.dim)
        for k in range(n_steps + 1):
            if k > 0:
                u_k = step_dense @ u_k
            if k not in recorded:
                continue
            rho_u = _depolarized_evolution(MixedState.from_pure(prep_pure), layout, u_k, noise.p, backward=False)
            rho = _depolarized_evolution(rho_u.copy(), layout, u_k, noise.p, backward=True)
            results.append(_channel_result(k * dt, rho, rho_u, layout, edge_p))
        return results
    if not isinstance(step, Circuit):
        raise ValueError(f"Noise scope {noise.scope} needs a Circuit, got a dense unitary")
    forward, backward = protocol_circuits(layout, step)
    prep = build_epr_prep(layout.prep_pairs, layout.n_total)
    rho = run_noisy_circuit_density(MixedState.from_pure(PureState.zero(layout.n_total)), prep, edge_p)
    rho_u = rho.copy()
    for k in range(n_steps + 1):
        if k > 0:
            rho_u = run_noisy_circuit_density(rho_u, forward, noise.p)
            rho = run_noisy_circuit_density(rho, forward, noise.p)
            rho = run_noisy_circuit_density(rho, backward, noise.p)
        if k in recorded:
            results.append(_channel_result(k * dt, rho, rho_u, layout, edge_p))
    return results


def _channel_result(t: float, rho: MixedState, rho_u: MixedState, layout: ProtocolLayout,
                    edge_p: float) -> HpResult:
    p, joint = _density_expectations(rho, layout, edge_p)
    result = HpResult(t=t, p_epr=p, f_epr=float('nan'))
    if p < PROJECTION_THRESHOLD:
        logger.warning(f"Channel-exact P_EPR numerically zero at t={t}")
        result.flags.append('zero_denominator')
    else:
        result.f_epr = joint / p
    result.diagnostics = decohered_diagnostics(rho_u, layout, p)
    return result


def run_hp_channel_exact(layout: ProtocolLayout, u: Evolution, noise: NoiseSpec, t: float = 0.0) -> HpResult:
    """Exact noisy protocol on the full density matrix, with Renyi-2 diagnostics.

    Raises:
        ValueError: if the layout exceeds the density-matrix size bound
    """
    result = channel_time_series(layout, u, 1, 1.0, noise)[-1]
    result.t = t
    return result


# -- Haar analytics ----------------------------------------------------------

def _check_dimensions(d_A: int, d_B: int, d_C: int, d_D: int) -> None:
    for d in (d_A, d_B, d_C, d_D):
        if d < 1 or d & (d - 1):
            raise ValueError(f"Dimensions must be powers of two, got {d}")
    if d_A * d_B != d_C * d_D:
        raise ValueError(f"Need d_A d_B = d_C d_D, got {d_A}*{d_B} != {d_C}*{d_D}")


def haar_p_epr_exact(d_A: int, d_B: int, d_C: int, d_D: int) -> Fraction:
    """Haar average of P_EPR as an exact fraction."""
    _check_dimensions(d_A, d_B, d_C, d_D)
    d = d_A * d_B
    return (Fraction(d_B ** 2 + d_C ** 2 - 1) - Fraction(d_C ** 2, d_A ** 2)) / (d * d - 1)


def haar_baselines(d_A: int, d_B: int, d_C: int, d_D: int) -> HaarBaselines:
    """Haar-averaged P_EPR, F_EPR and Tr[rho_RD^2], exact and large-d forms."""
    p_exact = haar_p_epr_exact(d_A, d_B, d_C, d_D)
    d = d_A * d_B
    purity = (Fraction(d_B * d_C + d_A * d_D, d * d - 1)
              - Fraction(d_B * d_D + d_A * d_C, d * (d * d - 1)))
    return HaarBaselines(
        p_haar_exact=float(p_exact),
        p_haar_approx=1 / d_A ** 2 + 1 / d_D ** 2 - 1 / (d_A ** 2 * d_D ** 2),
        f_haar_exact=float(1 / (d_A ** 2 * p_exact)),
        f_haar_approx=1 / (1 + (d_A / d_D) ** 2),
        purity_rd_exact=float(purity),
        purity_rd_approx=1 / (d_A * d_D) + 1 / (d_B * d_C),
    )


def run_haar_samples(layout: ProtocolLayout, n_samples: int = DEFAULT_HAAR_SAMPLES,
                     rng: RngStream = RngStream(DEFAULT_SEED), progress: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """Ideal P_EPR and F_EPR for ``n_samples`` Haar-random U (sample s uses rng.child(s))."""
    p = np.empty(n_samples)
    f = np.empty(n_samples)
    for s in tqdm(range(n_samples), disable=not progress, desc='haar'):
        u = sample_haar_unitary(2 ** layout.N, rng.child(s))
        result = run_hp_ideal(layout, u)
        p[s], f[s] = result.p_epr, result.f_epr
    return p, f


# -- OTOC --------------------------------------------------------------------

def _pauli_operator(letters: str) -> np.ndarray:
    op = np.ones((1, 1), dtype=complex)
    for letter in letters:
        op = np.kron(op, PAULI_MATRICES[letter])
    return op


def _embed(op: np.ndarray, sites: Sequence[int], n: int) -> np.ndarray:
    """Dense operator on n qubits acting as ``op`` on ``sites``."""
    full = np.eye(2 ** n, dtype=complex)
    state = PureState(full.reshape(-1), norm_deferred=True, copy=False)
    apply_dense_unitary(state, op, list(sites))
    return state.amplitudes.reshape(2 ** n, 2 ** n)


def _otoc_dense(u: np.ndarray, layout: ProtocolLayout, a_letters: str, d_letters: str) -> complex:
    o_a = _embed(_pauli_operator(a_letters), layout.a_sites, layout.N)
    o_d = _embed(_pauli_operator(d_letters), layout.d_sites, layout.N)
    w = u.conj().T @ o_d @ u
    return complex(np.trace(o_a @ w @ o_a.conj().T @ w.conj().T)) / u.shape[0]


def _otoc_statevector(u_dag: Circuit, omega_u: PureState, layout: ProtocolLayout,
                      a_letters: str, d_letters: str) -> complex:
    """<a|b> on system ⊗ reference, using O_A|Omega> = O_A^T(reference)|Omega>."""
    n = layout.N
    sign = (-1) ** a_letters.count('Y')
    a_state = omega_u.copy()
    for site, letter in zip(layout.d_sites, d_letters):
        apply_pauli(a_state, site, letter)
    for site, letter in zip(layout.a_sites, a_letters):
        apply_pauli(a_state, n + site, letter)
    run_circuit(a_state, u_dag)
    b_state = omega_u.copy()
    for site, letter in zip(layout.d_sites, d_letters):
        apply_pauli(b_state, site, letter)
    run_circuit(b_state, u_dag)
    for site, letter in zip(layout.a_sites, a_letters):
        apply_pauli(b_state, site, letter)
    return sign * a_state.inner(b_state)


def _random_pauli(gen: np.random.Generator, size: int) -> str:
    return ''.join('IXYZ'[k] for k in gen.integers(4, size=size))


def averaged_otoc_mc(layout: ProtocolLayout, u_circuit: Evolution, n_samples: int,
                     rng: RngStream, method: str = 'auto') -> Tuple[float, float]:
    """Monte-Carlo average of Tr[O_A O_D(t) O_A^† O_D(t)^†]/d over random Paulis on A and D.

    Args:
        method: 'statevector' evolves two states per sample on system ⊗ reference,
            'dense' uses the N-qubit unitary matrix, 'auto' picks statevector for a Circuit
            and dense for an evolution given as a matrix

    Returns:
        (mean, standard error)
    """
    gen = as_generator(rng)
    if method == 'auto':
        method = 'statevector' if isinstance(u_circuit, Circuit) else 'dense'
    values = np.empty(n_samples)
    if method == 'dense':
        u = _as_dense(u_circuit).matrix

        def evaluate(a: str, d: str) -> complex:
            return _otoc_dense(u, layout, a, d)
    elif method == 'statevector':
        if not isinstance(u_circuit, Circuit):
            raise ValueError("statevector OTOC needs a Circuit")
        n = layout.N
        pairs = [(k, n + k) for k in range(n)]
        omega_u = run_circuit(PureState.zero(2 * n), build_epr_prep(pairs, 2 * n))
        run_circuit(omega_u, u_circuit)
        u_dag = inverse_circuit(u_circuit)

        def evaluate(a: str, d: str) -> complex:
            return _otoc_statevector(u_dag, omega_u, layout, a, d)
    else:
        raise ValueError(f"Unknown OTOC method: {method}")
    for s in range(n_samples):
        a_letters = _random_pauli(gen, layout.N_A)
        d_letters = _random_pauli(gen, layout.N_D)
        value = evaluate(a_letters, d_letters)
        if abs(value.imag) > 1e-9:
            logger.debug(f"OTOC sample {s} has imaginary part {value.imag:.3e}")
        values[s] = value.real
    err = values.std(ddof=1) / np.sqrt(n_samples) if n_samples > 1 else 0.0
    return float(values.mean()), float(err)


def exact_otoc_average(layout: ProtocolLayout, u: Evolution) -> float:
    """Average of the OTOC over all d_A^2 d_D^2 Pauli pairs."""
    dense = _as_dense(u).matrix
    total = 0.0
    a_all = [''.join(x) for x in itertools.product('IXYZ', repeat=layout.N_A)]
    d_all = [''.join(x) for x in itertools.product('IXYZ', repeat=layout.N_D)]
    for a in a_all:
        for d in d_all:
            total += _otoc_dense(dense, layout, a, d).real
    return total / (len(a_all) * len(d_all))


# -- state teleportation -----------------------------------------------------

def state_prep_unitary(psi: np.ndarray) -> DenseUnitary:
    """Unitary whose first column is ``psi``."""
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    dim = psi.size
    k = int(np.argmax(np.abs(psi)))
    basis = np.eye(dim, dtype=complex)
    columns = [psi] + [basis[:, j] for j in range(dim) if j != k]
    q, r = np.linalg.qr(np.column_stack(columns))
    q[:, 0] *= r[0, 0]
    return DenseUnitary(q, check=False)


def run_state_teleportation(layout: ProtocolLayout, u_circuit: Evolution,
                            psi: Union[PureState, np.ndarray]) -> Tuple[float, float]:
    """Teleport ``psi`` from A to R'.

    Registers are [AB | A'B' | R']; psi enters on A, B-B' and A'-R' start as
    EPR pairs, then U and conj(U) act and DD' is projected.

    Returns:
        (p_psi, f_psi) with f_psi = <psi|rho_R'|psi> after the projection

    Raises:
        ProjectionImpossibleError: if the projection probability vanishes
    """
    amplitudes = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi, dtype=complex)
    if amplitudes.size != layout.d_A:
        raise ValueError(f"psi must have dimension d_A={layout.d_A}, got {amplitudes.size}")
    amplitudes = amplitudes / np.linalg.norm(amplitudes)
    n, N = 2 * layout.N + layout.N_A, layout.N

    def mirror(k: int) -> int:
        return 2 * N - 1 - k

    pairs = [(b, mirror(b)) for b in layout.b_sites]
    pairs += [(mirror(a), 2 * N + i) for i, a in enumerate(layout.a_sites)]
    state = run_circuit(PureState.zero(n), build_epr_prep(pairs, n))
    apply_dense_unitary(state, state_prep_unitary(amplitudes), layout.a_sites)
    if isinstance(u_circuit, DenseUnitary):
        apply_dense_unitary(state, u_circuit, list(range(N)))
        apply_dense_unitary(state, u_circuit.conj(), [mirror(k) for k in range(N)])
    else:
        run_circuit(state, relabel_circuit(u_circuit, dict(enumerate(range(N))), n))
        run_circuit(state, relabel_circuit(conjugate_circuit(u_circuit),
                                           {k: mirror(k) for k in range(N)}, n))
    p_psi, projected = epr_projector_overlap(state, [(d, mirror(d)) for d in layout.d_sites])
    if projected is None:
        raise ProjectionImpossibleError(f"DD' projection probability {p_psi:.3e} below threshold")
    rho = reduced_density(projected, [2 * N + i for i in range(layout.N_A)]).matrix
    f_psi = float(np.real(np.vdot(amplitudes, rho @ amplitudes)))
    return p_psi, f_psi


# -- entropies ---------------------------------------------------------------

def scrambling_entropies(layout: ProtocolLayout, u_circuit: Evolution) -> ScramblingEntropies:
    """Mutual informations of |Psi> = U_AB |EPR>_RA |EPR>_BB'.

    The A'-R' pair stays a separate pure factor and drops out of every reduced state.
    """
    state = prepare_protocol_state(layout)
    if isinstance(u_circuit, DenseUnitary):
        apply_dense_unitary(state, u_circuit, layout.ab_qubits)
    else:
        run_circuit(state, relabel_circuit(u_circuit, dict(enumerate(layout.ab_qubits)), layout.n_total))
    r = layout.r_qubits
    c = [layout.ab(k) for k in layout.c_sites]
    d = [layout.ab(k) for k in layout.d_sites]
    bd = [layout.mirror(b) for b in layout.b_sites] + d
    cache: Dict[Tuple[int, ...], Tuple[float, float]] = {}

    def ent(qubits: List[int]) -> Tuple[float, float]:
        key = tuple(sorted(qubits))
        if key not in cache:
            cache[key] = entropies(reduced_density(state, list(key)))
        return cache[key]

    def mutual(x: List[int], y: List[int]) -> Tuple[float, float]:
        sx, sy, sxy = ent(x), ent(y), ent(x + y)
        return sx[0] + sy[0] - sxy[0], sx[1] + sy[1] - sxy[1]

    i_r_bd, i2_r_bd = mutual(r, bd)
    i_r_c, i2_r_c = mutual(r, c)
    i_r_d, i2_r_d = mutual(r, d)
    i_r_cd, _ = mutual(r, c + d)
    return ScramblingEntropies(
        i2_r_bd=i2_r_bd, i_r_bd=i_r_bd, i_r_c=i_r_c, i_r_d=i_r_d,
        i3_rcd=i_r_c + i_r_d - i_r_cd, i2_r_c=i2_r_c, i2_r_d=i2_r_d,
    )
