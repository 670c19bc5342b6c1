"""Pauli-string and sparse-matrix Hamiltonian containers."""
import logging
from collections import defaultdict
from typing import Dict, Iterable, List, Tuple

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix

logger = logging.getLogger(__name__)

PAULI_LETTERS = 'IXYZ'


class PauliHamiltonian:
    """Real linear combination of Pauli strings.

    Character ``k`` of a Pauli string acts on qubit ``k`` (qubit 0 is the
    most significant bit of a basis label).
    """

    def __init__(self, n_qubits: int, terms: Iterable[Tuple[float, str]] = ()):
        self.n_qubits = int(n_qubits)
        self.terms: List[Tuple[float, str]] = []
        for coefficient, pauli in terms:
            self.add_term(coefficient, pauli)

    def add_term(self, coefficient: float, pauli: str) -> None:
        """Append ``coefficient * pauli``.

        Raises:
            ValueError: if the coefficient is complex or the string is malformed
        """
        if isinstance(coefficient, complex):
            if abs(coefficient.imag) > 0:
                raise ValueError(f"Coefficient must be real, got {coefficient}")
            coefficient = coefficient.real
        if len(pauli) != self.n_qubits or any(c not in PAULI_LETTERS for c in pauli):
            raise ValueError(f"Invalid Pauli string {pauli!r} for {self.n_qubits} qubits")
        self.terms.append((float(coefficient), pauli))

    def __add__(self, other: 'PauliHamiltonian') -> 'PauliHamiltonian':
        if other.n_qubits != self.n_qubits:
            raise ValueError("Cannot add Hamiltonians on different qubit counts")
        return PauliHamiltonian(self.n_qubits, self.terms + other.terms)

    def __mul__(self, scale: float) -> 'PauliHamiltonian':
        return PauliHamiltonian(self.n_qubits, [(c * scale, p) for c, p in self.terms])

    __rmul__ = __mul__

    def __len__(self) -> int:
        return len(self.terms)

    def simplify(self, tol: float = 1e-14) -> 'PauliHamiltonian':
        """Merge equal strings and drop coefficients below ``tol``; strings sorted."""
        merged: Dict[str, float] = defaultdict(float)
        for coefficient, pauli in self.terms:
            merged[pauli] += coefficient
        return PauliHamiltonian(
            self.n_qubits,
            [(c, p) for p, c in sorted(merged.items()) if abs(c) > tol],
        )

    def coefficient(self, pauli: str) -> float:
        return sum(c for c, p in self.terms if p == pauli)

    def is_diagonal(self) -> bool:
        return all(set(p) <= {'I', 'Z'} for c, p in self.terms if c != 0.0)

    def to_sparse(self) -> csr_matrix:
        """Assemble the Hamiltonian as a scipy CSR matrix using bit masks."""
        n = self.n_qubits
        dim = 1 << n
        idx = np.arange(dim, dtype=np.int64)
        rows, cols, data = [], [], []
        for coefficient, pauli in self.terms:
            if coefficient == 0.0:
                continue
            flip = 0
            signed_bits = []
            n_y = 0
            for q, op in enumerate(pauli):
                bit = n - 1 - q
                if op in 'XY':
                    flip |= 1 << bit
                if op in 'YZ':
                    signed_bits.append(bit)
                if op == 'Y':
                    n_y += 1
            sign = np.ones(dim)
            for bit in signed_bits:
                sign *= 1 - 2 * ((idx >> bit) & 1)
            rows.append(idx ^ flip)
            cols.append(idx)
            data.append(coefficient * (1j ** n_y) * sign)
        if not data:
            return csr_matrix((dim, dim), dtype=complex)
        matrix = coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim), dtype=complex,
        )
        return matrix.tocsr()

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def to_text(self) -> str:
        """One term per line: ``coefficient pauli_string``."""
        return ''.join(f"{c!r} {p}\n" for c, p in self.terms)

    @classmethod
    def from_text(cls, text: str) -> 'PauliHamiltonian':
        terms = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            coefficient, pauli = line.split()
            terms.append((float(coefficient), pauli))
        if not terms:
            raise ValueError("No Hamiltonian terms found")
        return cls(len(terms[0][1]), terms)

    def __repr__(self) -> str:
        return f"PauliHamiltonian(n_qubits={self.n_qubits}, terms={len(self.terms)})"


def pauli_string(n_qubits: int, ops: Dict[int, str]) -> str:
    """Build a length-n string with ``ops[q]`` on qubit q and I elsewhere."""
    letters = ['I'] * n_qubits
    for q, op in ops.items():
        if not 0 <= q < n_qubits:
            raise ValueError(f"Qubit {q} out of range for {n_qubits} qubits")
        letters[q] = op
    return ''.join(letters)


class SparseHamiltonian:
    """Real sparse matrix given as (row, col, value) entries; duplicates accumulate."""

    def __init__(self, dim: int, entries: Iterable[Tuple[int, int, float]] = ()):
        self.dim = int(dim)
        self._values: Dict[Tuple[int, int], float] = defaultdict(float)
        for row, col, value in entries:
            self.add(row, col, value)

    def add(self, row: int, col: int, value: float) -> None:
        if not (0 <= row < self.dim and 0 <= col < self.dim):
            raise ValueError(f"Entry ({row}, {col}) outside a {self.dim}-dimensional matrix")
        self._values[(int(row), int(col))] += float(value)

    @property
    def entries(self) -> List[Tuple[int, int, float]]:
        return [(r, c, v) for (r, c), v in sorted(self._values.items()) if v != 0.0]

    def __add__(self, other: 'SparseHamiltonian') -> 'SparseHamiltonian':
        if other.dim != self.dim:
            raise ValueError("Cannot add sparse Hamiltonians of different dimension")
        return SparseHamiltonian(self.dim, self.entries + other.entries)

    def to_scipy(self) -> csr_matrix:
        entries = self.entries
        if not entries:
            return csr_matrix((self.dim, self.dim))
        rows, cols, values = zip(*entries)
        return coo_matrix((values, (rows, cols)), shape=(self.dim, self.dim)).tocsr()

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        return all(abs(v - self._values.get((c, r), 0.0)) <= tol for (r, c), v in self._values.items())

    def to_text(self) -> str:
        """One entry per line: ``row col value``."""
        return ''.join(f"{r} {c} {v!r}\n" for r, c, v in self.entries)


def ising_hamiltonian(n_sites: int, h: float, m: float) -> PauliHamiltonian:
    """H = -sum Z_i Z_{i+1} - h sum X_i - m sum Z_i on an open chain."""
    if n_sites < 2:
        raise ValueError(f"Ising chain needs at least 2 sites, got {n_sites}")
    ham = PauliHamiltonian(n_sites)
    for i in range(n_sites - 1):
        ham.add_term(-1.0, pauli_string(n_sites, {i: 'Z', i + 1: 'Z'}))
    for i in range(n_sites):
        if h != 0.0:
            ham.add_term(-h, pauli_string(n_sites, {i: 'X'}))
        if m != 0.0:
            ham.add_term(-m, pauli_string(n_sites, {i: 'Z'}))
    return ham
