"""Circuit representation, rotation decompositions, EPR builders and Trotter circuits."""
import logging
from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .config import PROJECTION_THRESHOLD
from .engine import Gate, PureState, apply_gate

logger = logging.getLogger(__name__)

SUPPORTED_AXES = ('Z', 'X', 'ZZ', 'XZ', 'ZX', 'ZXZ')


@dataclass(frozen=True)
class Circuit:
    """Immutable gate list over {H, RZ, CNOT}; list order is time order."""
    n_qubits: int
    gates: Tuple[Gate, ...] = ()
    label: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'gates', tuple(self.gates))
        for gate in self.gates:
            if max(gate.qubits) >= self.n_qubits:
                raise ValueError(f"{gate} out of range for a {self.n_qubits}-qubit circuit")

    def __len__(self) -> int:
        return len(self.gates)

    def __add__(self, other: 'Circuit') -> 'Circuit':
        label = '+'.join(x for x in (self.label, other.label) if x)
        return Circuit(max(self.n_qubits, other.n_qubits), self.gates + other.gates, label)

    def repeat(self, times: int) -> 'Circuit':
        return Circuit(self.n_qubits, self.gates * times, self.label)

    def cnot_count(self) -> int:
        return sum(1 for g in self.gates if g.kind == 'CNOT')

    def with_label(self, label: str) -> 'Circuit':
        return Circuit(self.n_qubits, self.gates, label)


@dataclass(frozen=True)
class TrotterSpec:
    """Total time ``t`` split into ``M`` equal steps."""
    t: float
    M: int

    def __post_init__(self):
        if self.M < 1:
            raise ValueError(f"Trotter step count must be >= 1, got {self.M}")
        if self.t < 0:
            raise ValueError(f"Evolution time must be >= 0, got {self.t}")

    @property
    def dt(self) -> float:
        return self.t / self.M


@dataclass(frozen=True)
class IsingParams:
    N: int
    h: float = 0.0
    m: float = 0.0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"Ising chain needs N >= 2, got {self.N}")


@dataclass(frozen=True)
class YmParams:
    N: int
    K: float = 0.0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"Yang-Mills-Ising chain needs N >= 1, got {self.N}")
        if self.K < 0:
            raise ValueError(f"Magnetic coupling must be >= 0, got {self.K}")


def cnot_count(circuit: Circuit) -> int:
    return circuit.cnot_count()


def _check_pairs(pairs: Sequence[Tuple[int, int]]) -> List[Tuple[int, int]]:
    pairs = [(int(a), int(b)) for a, b in pairs]
    flat = [q for pair in pairs for q in pair]
    if len(set(flat)) != len(flat):
        raise ValueError(f"EPR pairs overlap: {pairs}")
    return pairs


def build_epr_prep(pairs: Sequence[Tuple[int, int]], n_qubits: Optional[int] = None) -> Circuit:
    """H on the first qubit of each pair followed by CNOT into the second."""
    pairs = _check_pairs(pairs)
    n = n_qubits if n_qubits is not None else max((max(p) for p in pairs), default=-1) + 1
    gates = []
    for a, b in pairs:
        gates.append(Gate.h(a))
        gates.append(Gate.cnot(a, b))
    return Circuit(n, gates, 'epr_prep')


def build_epr_measure(pairs: Sequence[Tuple[int, int]], n_qubits: Optional[int] = None) -> Circuit:
    """Inverse of build_epr_prep: an EPR pair maps to |00>, so success is the all-zero outcome."""
    pairs = _check_pairs(pairs)
    n = n_qubits if n_qubits is not None else max((max(p) for p in pairs), default=-1) + 1
    gates = []
    for a, b in pairs:
        gates.append(Gate.cnot(a, b))
        gates.append(Gate.h(a))
    return Circuit(n, gates, 'epr_measure')


def contract_epr_pairs(state: Union[PureState, np.ndarray], pairs: Sequence[Tuple[int, int]]) -> np.ndarray:
    """Return the amplitudes <EPR|^{⊗pairs} |psi> on the remaining qubits (ascending order).

    The squared norm of the result is the projection probability.
    """
    tensor = state.as_tensor() if isinstance(state, PureState) else np.asarray(state)
    labels = list(range(tensor.ndim))
    for a, b in _check_pairs(pairs):
        ia, ib = labels.index(a), labels.index(b)
        lo = [slice(None)] * tensor.ndim
        hi = [slice(None)] * tensor.ndim
        lo[ia] = lo[ib] = 0
        hi[ia] = hi[ib] = 1
        tensor = (tensor[tuple(lo)] + tensor[tuple(hi)]) / np.sqrt(2.0)
        labels = [q for q in labels if q not in (a, b)]
    return tensor


def epr_projector_overlap(state: PureState, pairs: Sequence[Tuple[int, int]]) -> Tuple[float, Optional[PureState]]:
    """Project each pair onto (|00>+|11>)/sqrt(2).

    Returns:
        (prob, projected): prob = <psi|Pi|psi>; projected is the normalized
        post-projection state, or None when prob is below the projection threshold
    """
    pairs = _check_pairs(pairs)
    n = state.n_qubits
    if any(q >= n for pair in pairs for q in pair):
        raise ValueError(f"Pairs {pairs} out of range for {n} qubits")
    t = state.as_tensor().copy()
    for a, b in pairs:
        index = [[slice(None)] * n for _ in range(4)]
        for k, (x, y) in enumerate(((0, 0), (1, 1), (0, 1), (1, 0))):
            index[k][a], index[k][b] = x, y
        avg = (t[tuple(index[0])] + t[tuple(index[1])]) / 2.0
        t[tuple(index[0])] = avg
        t[tuple(index[1])] = avg
        t[tuple(index[2])] = 0.0
        t[tuple(index[3])] = 0.0
    amplitudes = t.reshape(-1)
    prob = float(np.real(np.vdot(amplitudes, amplitudes)))
    if prob < PROJECTION_THRESHOLD:
        logger.warning(f"EPR projection impossible on pairs {pairs}: probability {prob:.3e}")
        return prob, None
    projected = PureState(amplitudes, norm_deferred=True, copy=False).normalize()
    return prob, projected


def build_pauli_rotation(axis: str, theta: float, sites: Sequence[int],
                         n_qubits: Optional[int] = None) -> Circuit:
    """Circuit for exp(-i theta/2 * P) where P is ``axis`` on ``sites``.

    X letters are rotated to Z with H, the parity is collected onto the last
    site with a CNOT ladder, and one RZ carries the angle. ZZ and XZ cost 2
    CNOTs, ZXZ costs 4, single-site axes none.

    Raises:
        ValueError: for an unsupported axis or a site list of the wrong length
    """
    if axis not in SUPPORTED_AXES:
        raise ValueError(f"Unsupported rotation axis: {axis}")
    sites = [int(s) for s in sites]
    if len(sites) != len(axis) or len(set(sites)) != len(sites):
        raise ValueError(f"Axis {axis} needs {len(axis)} distinct sites, got {sites}")
    n = n_qubits if n_qubits is not None else max(sites) + 1
    basis = [Gate.h(s) for s, letter in zip(sites, axis) if letter == 'X']
    target = sites[-1]
    ladder = [Gate.cnot(s, target) for s in sites[:-1]]
    gates = basis + ladder + [Gate.rz(target, theta)] + ladder[::-1] + basis[::-1]
    return Circuit(n, gates, f"R{axis}")


def build_trotter_ising(p: IsingParams, spec: TrotterSpec) -> Circuit:
    """First-order Trotter circuit for H = -sum ZZ - h sum X - m sum Z.

    Each step applies the X layer first, then the ZZ and Z layers,
    2(N-1) CNOTs per step.
    """
    dt = spec.dt
    n = p.N
    step: List[Gate] = []
    if p.h != 0.0:
        for i in range(n):
            step.extend(build_pauli_rotation('X', -2.0 * p.h * dt, [i], n).gates)
    for i in range(n - 1):
        step.extend(build_pauli_rotation('ZZ', -2.0 * dt, [i, i + 1], n).gates)
    if p.m != 0.0:
        for i in range(n):
            step.extend(build_pauli_rotation('Z', -2.0 * p.m * dt, [i], n).gates)
    label = f"ising_N{n}_h{p.h}_m{p.m}_t{spec.t}_M{spec.M}"
    return Circuit(n, tuple(step) * spec.M, label)


def ym_magnetic_rotations(n: int, K: float, dt: float) -> List[Tuple[str, float, List[int]]]:
    """Magnetic rotations (axis, theta, sites) of one step, in time order.

    Site i carries -K/16 X_i (1 + 3 Z_{i-1})(1 + 3 Z_{i+1}). At the chain ends
    the missing Z is the identity, so X absorbs weight 4 and the single
    surviving XZ absorbs weight 12.
    """
    rotations = []
    unit = -K * dt / 8.0
    for i in reversed(range(n)):
        left = i > 0
        right = i < n - 1
        if n == 1:
            rotations.append(('X', 16 * unit, [i]))
        elif left and right:
            rotations.append(('X', unit, [i]))
            rotations.append(('ZX', 3 * unit, [i - 1, i]))
            rotations.append(('XZ', 3 * unit, [i, i + 1]))
            rotations.append(('ZXZ', 9 * unit, [i - 1, i, i + 1]))
        elif right:
            rotations.append(('X', 4 * unit, [i]))
            rotations.append(('XZ', 12 * unit, [i, i + 1]))
        else:
            rotations.append(('X', 4 * unit, [i]))
            rotations.append(('ZX', 12 * unit, [i - 1, i]))
    return rotations


def ym_electric_rotations(n: int, dt: float) -> List[Tuple[str, float, List[int]]]:
    """Diagonal rotations of one step; the constant (9N+3)/16 is dropped as a global phase."""
    rotations = []
    for i in range(1, n):
        rotations.append(('ZZ', 2.0 * (-3.0 / 16.0) * dt, [i - 1, i]))
    for i in range(n):
        weight = 2 + (i == 0) + (i == n - 1)
        rotations.append(('Z', 2.0 * (-3.0 * weight / 16.0) * dt, [i]))
    return rotations


def build_trotter_ym(p: YmParams, spec: TrotterSpec) -> Circuit:
    """First-order Trotter circuit for the Yang-Mills-Ising chain, 10N-14 CNOTs per step.

    Each step applies the magnetic rotations (sites in descending order,
    per site X, left XZ, right XZ, ZXZ) and then the diagonal layer.
    """
    if p.N < 2:
        raise ValueError(f"Trotter circuit for the Yang-Mills-Ising chain needs N >= 2, got {p.N}")
    dt = spec.dt
    n = p.N
    step: List[Gate] = []
    for axis, theta, sites in ym_magnetic_rotations(n, p.K, dt) + ym_electric_rotations(n, dt):
        step.extend(build_pauli_rotation(axis, theta, sites, n).gates)
    label = f"ym_N{n}_K{p.K}_t{spec.t}_M{spec.M}"
    return Circuit(n, tuple(step) * spec.M, label)


def conjugate_circuit(c: Circuit) -> Circuit:
    """Entry-wise complex conjugate: only RZ angles flip sign."""
    gates = [Gate.rz(g.qubits[0], -g.angle) if g.kind == 'RZ' else g for g in c.gates]
    return Circuit(c.n_qubits, gates, f"conj({c.label})" if c.label else '')


def inverse_circuit(c: Circuit) -> Circuit:
    gates = [Gate.rz(g.qubits[0], -g.angle) if g.kind == 'RZ' else g for g in reversed(c.gates)]
    return Circuit(c.n_qubits, gates, f"inv({c.label})" if c.label else '')


def relabel_circuit(c: Circuit, mapping: Union[Mapping[int, int], Sequence[int]],
                    n_qubits: Optional[int] = None) -> Circuit:
    """Substitute qubit q by mapping[q] in every gate.

    Raises:
        ValueError: if the map is not injective or misses a used qubit
    """
    if not isinstance(mapping, Mapping):
        mapping = dict(enumerate(mapping))
    mapping = {int(k): int(v) for k, v in mapping.items()}
    if len(set(mapping.values())) != len(mapping):
        raise ValueError(f"Relabel map is not injective: {mapping}")
    try:
        gates = [Gate(g.kind, tuple(mapping[q] for q in g.qubits), g.angle) for g in c.gates]
    except KeyError as e:
        raise ValueError(f"Relabel map has no image for qubit {e.args[0]}") from e
    n = n_qubits if n_qubits is not None else max(max(mapping.values(), default=-1) + 1, 0)
    return Circuit(n, gates, c.label)


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Dense matrix of the circuit (gates applied to the row index of the identity)."""
    n = c.n_qubits
    dim = 1 << n
    vec = PureState(np.eye(dim, dtype=complex).reshape(-1), norm_deferred=True, copy=False)
    for gate in c.gates:
        apply_gate(vec, gate)
    return vec.amplitudes.reshape(dim, dim)


def circuit_to_text(c: Circuit) -> str:
    """One gate per line: ``H q``, ``RZ q theta``, ``CNOT c t``."""
    lines = []
    for g in c.gates:
        if g.kind == 'RZ':
            lines.append(f"RZ {g.qubits[0]} {g.angle!r}")
        else:
            lines.append(' '.join([g.kind] + [str(q) for q in g.qubits]))
    return '\n'.join(lines) + ('\n' if lines else '')


def circuit_from_text(text: str, n_qubits: Optional[int] = None, label: str = '') -> Circuit:
    gates = []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts or parts[0].startswith('#'):
            continue
        try:
            if parts[0] == 'RZ':
                gates.append(Gate.rz(int(parts[1]), float(parts[2])))
            elif parts[0] == 'H':
                gates.append(Gate.h(int(parts[1])))
            elif parts[0] == 'CNOT':
                gates.append(Gate.cnot(int(parts[1]), int(parts[2])))
            else:
                raise ValueError(f"unknown gate {parts[0]!r}")
        except (IndexError, ValueError) as e:
            raise ValueError(f"Malformed circuit line {lineno}: {line!r} ({e})") from e
    n = n_qubits if n_qubits is not None else max((max(g.qubits) for g in gates), default=-1) + 1
    return Circuit(n, gates, label)
