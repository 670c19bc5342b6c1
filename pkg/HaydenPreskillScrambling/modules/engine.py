"""Numerical core: pure and mixed states, gate kernels, reduced states, Haar sampling and exact evolution.

Qubit 0 is the most significant bit of a basis-state label, so a C-order
reshape of the amplitude vector to ``(2,) * n`` puts qubit ``k`` on axis ``k``.
"""
import logging
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from .config import (
    HERMITIAN_TOL,
    MAX_EXACT_QUBITS,
    MAX_REDUCED_QUBITS,
    NORM_TOL,
    PSD_TOL,
)

logger = logging.getLogger(__name__)

GATE_KINDS = ('H', 'RZ', 'CNOT')
_INV_SQRT2 = 1.0 / np.sqrt(2.0)


def _num_qubits(dim: int) -> int:
    """Return log2(dim), raising ValueError when dim is not a power of two."""
    n = int(dim).bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise ValueError(f"Dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by (master_seed, stream_index).

    Child streams append to the spawn key, so adding trajectories never
    reshuffles the draws of earlier ones.
    """
    master_seed: int
    stream_index: int = 0
    subkey: Tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            entropy=int(self.master_seed),
            spawn_key=(int(self.stream_index),) + tuple(self.subkey),
        )
        return np.random.default_rng(seq)

    def child(self, index: int) -> 'RngStream':
        return RngStream(self.master_seed, self.stream_index, self.subkey + (int(index),))


RngLike = Union[RngStream, np.random.Generator, int, None]


def as_generator(rng: RngLike) -> np.random.Generator:
    """Coerce an RngStream, seed or Generator into a numpy Generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class Gate:
    """One element of the {H, RZ, CNOT} gate alphabet.

    Attributes:
        kind: 'H', 'RZ' or 'CNOT'
        qubits: (q,) for H and RZ, (control, target) for CNOT
        angle: rotation angle in radians (RZ only)
    """
    kind: str
    qubits: Tuple[int, ...]
    angle: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'qubits', tuple(int(q) for q in self.qubits))
        if self.kind not in GATE_KINDS:
            raise ValueError(f"Unsupported gate kind: {self.kind}")
        arity = 2 if self.kind == 'CNOT' else 1
        if len(self.qubits) != arity:
            raise ValueError(f"{self.kind} acts on {arity} qubit(s), got {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ValueError(f"Negative qubit index in {self}")
        if self.kind == 'CNOT' and self.qubits[0] == self.qubits[1]:
            raise ValueError(f"CNOT control equals target: {self.qubits}")
        object.__setattr__(self, 'angle', float(self.angle) if self.kind == 'RZ' else 0.0)

    @classmethod
    def h(cls, q: int) -> 'Gate':
        return cls('H', (q,))

    @classmethod
    def rz(cls, q: int, theta: float) -> 'Gate':
        return cls('RZ', (q,), theta)

    @classmethod
    def cnot(cls, control: int, target: int) -> 'Gate':
        return cls('CNOT', (control, target))

    def matrix(self) -> np.ndarray:
        """Dense matrix of the gate on its own qubits (control first for CNOT)."""
        if self.kind == 'H':
            return np.array([[1, 1], [1, -1]], dtype=complex) * _INV_SQRT2
        if self.kind == 'RZ':
            return np.diag([np.exp(-0.5j * self.angle), np.exp(0.5j * self.angle)])
        return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


class DenseUnitary:
    """Dense unitary matrix acting on ``log2(dim)`` qubits."""

    def __init__(self, matrix: np.ndarray, check: bool = True):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"Unitary must be square, got shape {matrix.shape}")
        self.matrix = matrix
        self.dim = matrix.shape[0]
        if check and not self.is_unitary():
            raise ValueError("Matrix is not unitary within tolerance")

    @property
    def n_qubits(self) -> int:
        return _num_qubits(self.dim)

    def is_unitary(self, tol: float = NORM_TOL) -> bool:
        eye = np.eye(self.dim)
        return bool(np.allclose(self.matrix @ self.matrix.conj().T, eye, atol=tol, rtol=0))

    def conj(self) -> 'DenseUnitary':
        return DenseUnitary(self.matrix.conj(), check=False)

    def dagger(self) -> 'DenseUnitary':
        return DenseUnitary(self.matrix.conj().T, check=False)

    def __matmul__(self, other: 'DenseUnitary') -> 'DenseUnitary':
        return DenseUnitary(self.matrix @ other.matrix, check=False)

    @classmethod
    def identity(cls, dim: int) -> 'DenseUnitary':
        return cls(np.eye(dim, dtype=complex), check=False)


class PureState:
    """Dense complex amplitude vector over 2^n basis states.

    ``norm_deferred`` marks intermediate states (projected or vectorized
    density matrices) that are intentionally not normalized.
    """

    def __init__(self, amplitudes: np.ndarray, norm_deferred: bool = False, copy: bool = True):
        if copy:
            amplitudes = np.array(amplitudes, dtype=complex)
        amplitudes = np.asarray(amplitudes, dtype=complex).reshape(-1)
        self.amplitudes = amplitudes
        self.n_qubits = _num_qubits(amplitudes.size)
        self.norm_deferred = norm_deferred
        if not norm_deferred and abs(self.norm() - 1.0) > NORM_TOL:
            raise ValueError(f"State is not normalized (norm={self.norm():.3e}); pass norm_deferred=True")

    @classmethod
    def zero(cls, n_qubits: int) -> 'PureState':
        return cls.basis(n_qubits, 0)

    @classmethod
    def basis(cls, n_qubits: int, index: Union[int, str]) -> 'PureState':
        """Computational basis state from an integer or a bit string (qubit 0 first)."""
        if isinstance(index, str):
            if len(index) != n_qubits:
                raise ValueError(f"Bit string {index!r} does not have {n_qubits} bits")
            index = int(index, 2)
        amplitudes = np.zeros(1 << n_qubits, dtype=complex)
        amplitudes[index] = 1.0
        return cls(amplitudes, copy=False)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> 'PureState':
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("Cannot normalize the zero vector")
        self.amplitudes /= nrm
        self.norm_deferred = False
        return self

    def copy(self) -> 'PureState':
        return PureState(self.amplitudes, norm_deferred=self.norm_deferred, copy=True)

    def tensor(self, other: 'PureState') -> 'PureState':
        """Return self ⊗ other; self's qubits come first."""
        return PureState(np.kron(self.amplitudes, other.amplitudes),
                         norm_deferred=self.norm_deferred or other.norm_deferred, copy=False)

    def as_tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def inner(self, other: 'PureState') -> complex:
        """Return <self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))


class MixedState:
    """Dense density operator over 2^n basis states."""

    def __init__(self, matrix: np.ndarray, check: bool = True, copy: bool = True):
        matrix = np.array(matrix, dtype=complex) if copy else np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"Density matrix must be square, got shape {matrix.shape}")
        self.matrix = matrix
        self.n_qubits = _num_qubits(matrix.shape[0])
        if check:
            self.validate()

    @classmethod
    def from_pure(cls, state: PureState) -> 'MixedState':
        psi = state.amplitudes
        return cls(np.outer(psi, psi.conj()), check=False, copy=False)

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> 'MixedState':
        dim = 1 << n_qubits
        return cls(np.eye(dim, dtype=complex) / dim, check=False, copy=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def copy(self) -> 'MixedState':
        return MixedState(self.matrix, check=False, copy=True)

    def validate(self) -> None:
        """Raise ValueError unless Hermitian, unit-trace and PSD within tolerance."""
        if not np.allclose(self.matrix, self.matrix.conj().T, atol=HERMITIAN_TOL, rtol=0):
            raise ValueError("Density matrix is not Hermitian")
        if abs(self.trace() - 1.0) > NORM_TOL:
            raise ValueError(f"Density matrix trace is {self.trace():.12f}, expected 1")
        min_eig = float(linalg.eigvalsh(self.matrix).min())
        if min_eig < -PSD_TOL:
            raise ValueError(f"Density matrix has negative eigenvalue {min_eig:.3e}")

    def vectorized(self) -> PureState:
        """View the matrix as a 2n-qubit norm-deferred vector (row qubits first).

        A gate ``g`` on qubit ``q`` of the density matrix acts as ``g`` on
        qubit ``q`` and ``conj(g)`` on qubit ``q + n`` of this vector.
        """
        return PureState(self.matrix.reshape(-1), norm_deferred=True, copy=False)

    def apply_gate(self, gate: Gate) -> 'MixedState':
        vec = self.vectorized()
        apply_gate(vec, gate)
        apply_gate(vec, _conjugate_gate(_shift_gate(gate, self.n_qubits)))
        self.matrix = vec.amplitudes.reshape(self.dim, self.dim)
        return self

    def apply_unitary(self, u: Union[DenseUnitary, np.ndarray], targets: Sequence[int]) -> 'MixedState':
        matrix = u.matrix if isinstance(u, DenseUnitary) else np.asarray(u, dtype=complex)
        vec = self.vectorized()
        apply_dense_unitary(vec, matrix, list(targets))
        apply_dense_unitary(vec, matrix.conj(), [q + self.n_qubits for q in targets])
        self.matrix = vec.amplitudes.reshape(self.dim, self.dim)
        return self

    def partial_trace(self, keep: Sequence[int]) -> 'MixedState':
        """Trace out every qubit not in ``keep``; kept qubits follow the order given."""
        keep = _validate_subset(keep, self.n_qubits)
        n = self.n_qubits
        rest = [q for q in range(n) if q not in keep]
        k = len(keep)
        t = self.matrix.reshape((2,) * (2 * n))
        t = t.transpose(keep + rest + [n + q for q in keep] + [n + q for q in rest])
        t = t.reshape(1 << k, 1 << (n - k), 1 << k, 1 << (n - k))
        return MixedState(np.einsum('arbr->ab', t), check=False, copy=False)


def _shift_gate(gate: Gate, offset: int) -> Gate:
    return Gate(gate.kind, tuple(q + offset for q in gate.qubits), gate.angle)


def _conjugate_gate(gate: Gate) -> Gate:
    if gate.kind == 'RZ':
        return Gate('RZ', gate.qubits, -gate.angle)
    return gate


def _validate_subset(subset: Iterable[int], n_qubits: int) -> List[int]:
    subset = [int(q) for q in subset]
    if len(set(subset)) != len(subset):
        raise ValueError(f"Subset has repeated qubits: {subset}")
    bad = [q for q in subset if q < 0 or q >= n_qubits]
    if bad:
        raise ValueError(f"Subset indices {bad} out of range for {n_qubits} qubits")
    return subset


def apply_gate(state: PureState, gate: Gate) -> PureState:
    """Apply one gate to ``state`` in place and return it.

    Raises:
        ValueError: if a gate index is out of range (malformed circuit)
    """
    n = state.n_qubits
    if max(gate.qubits) >= n:
        raise ValueError(f"Malformed circuit: {gate} addresses a {n}-qubit state")
    psi = state.amplitudes
    if gate.kind == 'CNOT':
        control, target = gate.qubits
        t = psi.reshape((2,) * n)
        index = [slice(None)] * n
        index[control] = 1
        sub = t[tuple(index)]
        axis = target if target < control else target - 1
        lo = [slice(None)] * (n - 1)
        hi = [slice(None)] * (n - 1)
        lo[axis] = 0
        hi[axis] = 1
        tmp = sub[tuple(lo)].copy()
        sub[tuple(lo)] = sub[tuple(hi)]
        sub[tuple(hi)] = tmp
        return state
    q = gate.qubits[0]
    v = psi.reshape(1 << q, 2, -1)
    if gate.kind == 'H':
        a = v[:, 0, :].copy()
        v[:, 0, :] += v[:, 1, :]
        v[:, 0, :] *= _INV_SQRT2
        v[:, 1, :] = (a - v[:, 1, :]) * _INV_SQRT2
    else:
        v[:, 0, :] *= np.exp(-0.5j * gate.angle)
        v[:, 1, :] *= np.exp(0.5j * gate.angle)
    return state


def run_circuit(state: PureState, circuit) -> PureState:
    """Apply the gates of ``circuit`` (a Circuit or an iterable of Gates) in list order."""
    n_circuit = getattr(circuit, 'n_qubits', None)
    if n_circuit is not None and n_circuit > state.n_qubits:
        raise ValueError(f"Circuit on {n_circuit} qubits cannot run on a {state.n_qubits}-qubit state")
    for gate in getattr(circuit, 'gates', circuit):
        apply_gate(state, gate)
    return state


def apply_dense_unitary(state: PureState, u: Union[DenseUnitary, np.ndarray],
                        targets: Sequence[int]) -> PureState:
    """Contract a dense unitary onto ``targets`` (first target is the most significant).

    Raises:
        ValueError: if the unitary dimension does not match 2^len(targets)
    """
    matrix = u.matrix if isinstance(u, DenseUnitary) else np.asarray(u, dtype=complex)
    targets = _validate_subset(targets, state.n_qubits)
    k = len(targets)
    if matrix.shape != (1 << k, 1 << k):
        raise ValueError(f"Unitary of shape {matrix.shape} does not act on {k} target qubit(s)")
    n = state.n_qubits
    t = state.amplitudes.reshape((2,) * n)
    out = np.tensordot(matrix.reshape((2,) * (2 * k)), t, axes=(list(range(k, 2 * k)), targets))
    out = np.moveaxis(out, list(range(k)), targets)
    state.amplitudes = np.ascontiguousarray(out).reshape(-1)
    return state


def sample_haar_unitary(dim: int, rng: RngLike) -> DenseUnitary:
    """Draw a Haar-random unitary by QR of a complex Ginibre matrix.

    The columns of Q are rescaled by the phases of diag(R); without that
    correction the distribution is not Haar.
    """
    if dim < 1:
        raise ValueError(f"Dimension must be positive, got {dim}")
    gen = as_generator(rng)
    z = (gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return DenseUnitary(q, check=False)


def haar_random_state(n_qubits: int, rng: RngLike) -> PureState:
    """Draw a Haar-random pure state on ``n_qubits`` qubits."""
    gen = as_generator(rng)
    dim = 1 << n_qubits
    z = gen.standard_normal(dim) + 1j * gen.standard_normal(dim)
    return PureState(z / np.linalg.norm(z), copy=False)


class SpectralPropagator:
    """Cached eigendecomposition of a Hamiltonian for repeated e^{-iHt}."""

    def __init__(self, h):
        dense = h.to_dense() if hasattr(h, 'to_dense') else np.asarray(h, dtype=complex)
        n = _num_qubits(dense.shape[0])
        if n > MAX_EXACT_QUBITS:
            raise ValueError(f"Exact evolution limited to {MAX_EXACT_QUBITS} qubits, got {n}")
        if not np.allclose(dense, dense.conj().T, atol=HERMITIAN_TOL, rtol=0):
            raise ValueError("Hamiltonian is not Hermitian")
        self.n_qubits = n
        self.eigenvalues, self.eigenvectors = linalg.eigh(dense)
        logger.debug(f"Diagonalized {n}-qubit Hamiltonian, spectrum [{self.eigenvalues[0]:.4f}, {self.eigenvalues[-1]:.4f}]")

    def unitary(self, t: float) -> DenseUnitary:
        phases = np.exp(-1j * self.eigenvalues * t)
        v = self.eigenvectors
        return DenseUnitary((v * phases) @ v.conj().T, check=False)


def exact_unitary(h, t: float) -> DenseUnitary:
    """Return e^{-iHt} from the Hermitian eigendecomposition of the dense Hamiltonian.

    Args:
        h: PauliHamiltonian (or anything with ``to_dense()``) or a Hermitian array
        t: evolution time

    Raises:
        ValueError: if the Hamiltonian exceeds the dense size bound
    """
    return SpectralPropagator(h).unitary(t)


def reduced_density(state: PureState, subset: Sequence[int]) -> MixedState:
    """Partial trace of |psi><psi| onto ``subset``; the subset order fixes the output qubit order."""
    subset = _validate_subset(subset, state.n_qubits)
    if len(subset) > MAX_REDUCED_QUBITS:
        raise ValueError(f"Reduced density limited to {MAX_REDUCED_QUBITS} qubits, got {len(subset)}")
    m = _split_matrix(state, subset)
    return MixedState(m @ m.conj().T, check=False, copy=False)


def _split_matrix(state: PureState, subset: List[int]) -> np.ndarray:
    n = state.n_qubits
    rest = [q for q in range(n) if q not in subset]
    t = state.as_tensor().transpose(subset + rest)
    return t.reshape(1 << len(subset), 1 << len(rest))


def reduced_purity(state: PureState, subset: Sequence[int], method: str = 'auto') -> float:
    """Return Tr[rho_subset^2].

    Args:
        state: pure state
        subset: qubits kept
        method: 'direct' (default via 'auto') contracts the Gram matrix of the
            smaller bipartition side; 'density' squares reduced_density

    Returns:
        Purity in (0, 1]
    """
    subset = _validate_subset(subset, state.n_qubits)
    if method == 'density':
        return reduced_density(state, subset).purity()
    if method not in ('auto', 'direct'):
        raise ValueError(f"Unknown purity method: {method}")
    m = _split_matrix(state, subset)
    gram = m @ m.conj().T if m.shape[0] <= m.shape[1] else m.conj().T @ m
    return float(np.real(np.vdot(gram, gram)))


def entropies(rho: Union[MixedState, np.ndarray]) -> Tuple[float, float]:
    """Return (von Neumann, Renyi-2) entropies in bits.

    Raises:
        ValueError: if rho has an eigenvalue below -PSD_TOL
    """
    matrix = rho.matrix if isinstance(rho, MixedState) else np.asarray(rho, dtype=complex)
    eigs = linalg.eigvalsh(matrix)
    if eigs.min() < -PSD_TOL:
        raise ValueError(f"Density matrix is not PSD (min eigenvalue {eigs.min():.3e})")
    eigs = np.clip(eigs, 0.0, None)
    nz = eigs[eigs > 1e-300]
    s_vn = float(-np.sum(nz * np.log2(nz)))
    s_2 = float(-np.log2(np.sum(eigs ** 2)))
    return max(s_vn, 0.0), max(s_2, 0.0)


PAULI_MATRICES = {
    'I': np.eye(2, dtype=complex),
    'X': np.array([[0, 1], [1, 0]], dtype=complex),
    'Y': np.array([[0, -1j], [1j, 0]], dtype=complex),
    'Z': np.array([[1, 0], [0, -1]], dtype=complex),
}


def apply_pauli(state: PureState, qubit: int, letter: str) -> PureState:
    """Apply a single-qubit Pauli in place."""
    if not 0 <= qubit < state.n_qubits:
        raise ValueError(f"Qubit {qubit} out of range for {state.n_qubits} qubits")
    v = state.amplitudes.reshape(1 << qubit, 2, -1)
    if letter == 'X':
        v[:, [0, 1], :] = v[:, [1, 0], :]
    elif letter == 'Z':
        v[:, 1, :] *= -1.0
    elif letter == 'Y':
        a = v[:, 0, :].copy()
        v[:, 0, :] = -1j * v[:, 1, :]
        v[:, 1, :] = 1j * a
    elif letter != 'I':
        raise ValueError(f"Unknown Pauli {letter!r}")
    return state
