"""Exact CPTP channel steps on density matrices."""
import itertools
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .engine import PAULI_MATRICES, DenseUnitary, Gate, MixedState

logger = logging.getLogger(__name__)


def _check_probability(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"Error probability must lie in [0, 1], got {p}")
    return float(p)


@dataclass(frozen=True)
class UnitaryStep:
    """Conjugation by a circuit, a single gate, or a dense unitary on ``targets``."""
    circuit: object = None
    unitary: Optional[DenseUnitary] = None
    targets: Tuple[int, ...] = ()


@dataclass(frozen=True)
class DepolarizeStep:
    """Replace the ``targets`` register by the maximally mixed state with probability p."""
    p: float
    targets: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'p', _check_probability(self.p))
        object.__setattr__(self, 'targets', tuple(int(q) for q in self.targets))


@dataclass(frozen=True)
class CnotDepolarizeStep:
    """Noisy CNOT: (1-p) C rho C + p (I/4) ⊗ Tr_{control,target}[rho]."""
    p: float
    control: int
    target: int

    def __post_init__(self):
        object.__setattr__(self, 'p', _check_probability(self.p))
        if self.control == self.target:
            raise ValueError(f"CNOT control equals target: {self.control}")


ChannelStep = Union[UnitaryStep, DepolarizeStep, CnotDepolarizeStep]


def depolarize(rho: MixedState, targets: Sequence[int], p: float) -> MixedState:
    """Return (1-p) rho + p (I/2^k) ⊗ Tr_targets[rho] as a new state."""
    p = _check_probability(p)
    targets = [int(q) for q in targets]
    n = rho.n_qubits
    rest = [q for q in range(n) if q not in targets]
    if p == 0.0 or not targets:
        return rho.copy()
    k = len(targets)
    rho_rest = rho.partial_trace(rest).matrix if rest else np.ones((1, 1), dtype=complex)
    mixed = np.kron(np.eye(1 << k) / (1 << k), rho_rest)
    # axes of `mixed` are ordered [targets, rest]; put them back in qubit order
    order = targets + rest
    inverse = list(np.argsort(order))
    t = mixed.reshape((2,) * (2 * n)).transpose(inverse + [n + i for i in inverse])
    replaced = t.reshape(rho.dim, rho.dim)
    return MixedState((1.0 - p) * rho.matrix + p * replaced, check=False, copy=False)


def apply_channel_step(rho: MixedState, step: ChannelStep) -> MixedState:
    """Apply one channel step exactly and return the new state.

    Raises:
        ValueError: for unknown step types or p outside [0, 1]
    """
    if isinstance(step, UnitaryStep):
        out = rho.copy()
        if step.unitary is not None:
            return out.apply_unitary(step.unitary, step.targets)
        gates = [step.circuit] if isinstance(step.circuit, Gate) else getattr(step.circuit, 'gates', step.circuit)
        for gate in gates:
            out.apply_gate(gate)
        return out
    if isinstance(step, DepolarizeStep):
        return depolarize(rho, step.targets, step.p)
    if isinstance(step, CnotDepolarizeStep):
        # depolarizing the pair after the CNOT equals depolarizing it before
        out = rho.copy().apply_gate(Gate.cnot(step.control, step.target))
        return depolarize(out, (step.control, step.target), step.p)
    raise ValueError(f"Unknown channel step: {step!r}")


def run_noisy_circuit_density(rho: MixedState, circuit, p: float) -> MixedState:
    """Run a circuit with every CNOT replaced by its depolarized version."""
    p = _check_probability(p)
    out = rho.copy()
    for gate in getattr(circuit, 'gates', circuit):
        if gate.kind == 'CNOT' and p > 0.0:
            out = apply_channel_step(out, CnotDepolarizeStep(p, *gate.qubits))
        else:
            out.apply_gate(gate)
    return out


def pauli_twirl_average(rho: MixedState, qubits: Sequence[int]) -> MixedState:
    """Average of P rho P over all 4^k Pauli strings on ``qubits``."""
    qubits = list(qubits)
    total = np.zeros_like(rho.matrix)
    strings = list(itertools.product('IXYZ', repeat=len(qubits)))
    for letters in strings:
        op = np.ones((1, 1), dtype=complex)
        for letter in letters:
            op = np.kron(op, PAULI_MATRICES[letter])
        total += rho.copy().apply_unitary(op, qubits).matrix
    return MixedState(total / len(strings), check=False, copy=False)
