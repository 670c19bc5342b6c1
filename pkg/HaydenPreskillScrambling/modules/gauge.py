"""Truncated SU(2) Kogut-Susskind Hamiltonian on a two-leg ladder and its spin-chain form.

Spins are stored as twice their value. Link labels for plaquette i:
``j[i]`` lower horizontal, ``j_prime[i]`` upper horizontal, ``j_dprime[i]``
left vertical and ``j_dprime[i + 1]`` right vertical. Horizontal links
outside 0..N-1 carry spin zero.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, total_ordering
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .hamiltonian import PauliHamiltonian, SparseHamiltonian, pauli_string

logger = logging.getLogger(__name__)

SpinLike = Union['HalfInt', int, float, Fraction]


@total_ordering
@dataclass(frozen=True)
class HalfInt:
    """Non-negative half-integer stored as ``twice_value``."""
    twice_value: int

    def __post_init__(self):
        if self.twice_value < 0:
            raise ValueError(f"Spin must be non-negative, got {self.twice_value}/2")

    @classmethod
    def of(cls, value: SpinLike) -> 'HalfInt':
        if isinstance(value, HalfInt):
            return value
        twice = Fraction(value) * 2
        if twice.denominator != 1:
            raise ValueError(f"{value} is not a half-integer")
        return cls(int(twice))

    @property
    def value(self) -> Fraction:
        return Fraction(self.twice_value, 2)

    def __float__(self) -> float:
        return self.twice_value / 2.0

    def __lt__(self, other: 'HalfInt') -> bool:
        return self.twice_value < HalfInt.of(other).twice_value

    def __str__(self) -> str:
        return str(self.twice_value // 2) if self.twice_value % 2 == 0 else f"{self.twice_value}/2"


def _twice(value: SpinLike) -> int:
    """Twice a (possibly negative) half-integer magnetic number or spin."""
    if isinstance(value, HalfInt):
        return value.twice_value
    twice = Fraction(value) * 2
    if twice.denominator != 1:
        raise ValueError(f"{value} is not a half-integer")
    return int(twice)


@dataclass(frozen=True)
class SqrtRational:
    """Exact number ``sign * sqrt(square)`` with a rational square."""
    sign: int
    square: Fraction

    @classmethod
    def zero(cls) -> 'SqrtRational':
        return cls(0, Fraction(0))

    @classmethod
    def from_signed_square(cls, sign: int, square: Fraction) -> 'SqrtRational':
        if square == 0 or sign == 0:
            return cls.zero()
        return cls(1 if sign > 0 else -1, Fraction(square))

    def __float__(self) -> float:
        return self.sign * math.sqrt(self.square)

    def __mul__(self, other: 'SqrtRational') -> 'SqrtRational':
        return SqrtRational.from_signed_square(self.sign * other.sign, self.square * other.square)

    def __neg__(self) -> 'SqrtRational':
        return SqrtRational(-self.sign, self.square)

    def __bool__(self) -> bool:
        return self.sign != 0


def _triangle(ta: int, tb: int, tc: int) -> bool:
    """Triangle condition on twice-spins, including integer total spin."""
    return abs(ta - tb) <= tc <= ta + tb and (ta + tb + tc) % 2 == 0


@lru_cache(maxsize=None)
def _wigner_3j_twice(t1: int, t2: int, t3: int, tm1: int, tm2: int, tm3: int) -> SqrtRational:
    if tm1 + tm2 + tm3 != 0 or not _triangle(t1, t2, t3):
        return SqrtRational.zero()
    for t, tm in ((t1, tm1), (t2, tm2), (t3, tm3)):
        if abs(tm) > t or (t - tm) % 2:
            return SqrtRational.zero()
    f = math.factorial
    a, b, c = t1, t2, t3
    delta = Fraction(f((a + b - c) // 2) * f((a - b + c) // 2) * f((-a + b + c) // 2),
                     f((a + b + c) // 2 + 1))
    square = delta
    for t, tm in ((t1, tm1), (t2, tm2), (t3, tm3)):
        square *= f((t + tm) // 2) * f((t - tm) // 2)
    k_min = max(0, (t2 - t3 - tm1) // 2, (t1 - t3 + tm2) // 2)
    k_max = min((t1 + t2 - t3) // 2, (t1 - tm1) // 2, (t2 + tm2) // 2)
    total = Fraction(0)
    for k in range(k_min, k_max + 1):
        denominator = (f(k) * f((t3 - t2 + tm1) // 2 + k) * f((t3 - t1 - tm2) // 2 + k)
                       * f((t1 + t2 - t3) // 2 - k) * f((t1 - tm1) // 2 - k) * f((t2 + tm2) // 2 - k))
        total += Fraction((-1) ** k, denominator)
    if total == 0:
        return SqrtRational.zero()
    phase = -1 if ((t1 - t2 - tm3) // 2) % 2 else 1
    sign = phase * (1 if total > 0 else -1)
    return SqrtRational.from_signed_square(sign, square * total * total)


def wigner_3j(j1: SpinLike, j2: SpinLike, j3: SpinLike,
              m1: SpinLike, m2: SpinLike, m3: SpinLike) -> SqrtRational:
    """Wigner 3j symbol from the Racah factorial formula in exact arithmetic.

    Returns zero when the triangle condition, m1 + m2 + m3 = 0 or |m| <= j fails.
    """
    return _wigner_3j_twice(_twice(j1), _twice(j2), _twice(j3), _twice(m1), _twice(m2), _twice(m3))


@lru_cache(maxsize=None)
def _lambda_twice(s_i: int, s_j: int, ta: int, tb: int, tc: int) -> SqrtRational:
    ta_new, tb_new = ta + s_i, tb + s_j
    if ta_new < 0 or tb_new < 0:
        return SqrtRational.zero()
    if not _triangle(ta, tb, tc) or not _triangle(ta_new, tb_new, tc):
        return SqrtRational.zero()
    a, b, c = Fraction(ta, 2), Fraction(tb, 2), Fraction(tc, 2)
    if s_i == 1 and s_j == 1:
        square = (2 + c + a + b) * (1 - c + a + b) / ((2 * a + 1) * (2 * b + 2))
        sign = 1
    elif s_i == -1 and s_j == -1:
        square = (c - a - b) * (-1 - a - b - c) / ((2 * a + 1) * (2 * b))
        sign = 1
    elif s_i == 1 and s_j == -1:
        square = (1 + c + a - b) * (c - a + b) / ((2 * a + 1) * (2 * b))
        sign = -1
    else:
        square = (1 + c - a + b) * (c + a - b) / ((2 * a + 1) * (2 * b + 2))
        sign = 1
    if square < 0:
        logger.warning(f"Negative lambda radicand for s=({s_i},{s_j}) spins=({a},{b},{c}): {square}")
        return SqrtRational.zero()
    return SqrtRational.from_signed_square(sign, square)


def lambda_coeff_exact(s_i: int, s_j: int, j_i: SpinLike, j_j: SpinLike, j_b: SpinLike) -> SqrtRational:
    """Vertex coefficient of raising (s=+1) or lowering (s=-1) links i and j next to spectator b."""
    if s_i not in (1, -1) or s_j not in (1, -1):
        raise ValueError(f"Signs must be +1 or -1, got ({s_i}, {s_j})")
    return _lambda_twice(s_i, s_j, _twice(j_i), _twice(j_j), _twice(j_b))


def lambda_coeff(s_i: int, s_j: int, j_i: SpinLike, j_j: SpinLike, j_b: SpinLike) -> float:
    """Float value of lambda_coeff_exact; zero for nonexistent transitions."""
    return float(lambda_coeff_exact(s_i, s_j, j_i, j_j, j_b))


def lambda_schwinger(s_i: int, s_j: int, j_i: SpinLike, j_j: SpinLike, j_b: SpinLike) -> float:
    """Vertex coefficient by brute force over magnetic quantum numbers.

    Builds the source singlet from 3j symbols, applies the two-link
    Schwinger-boson operator and overlaps with the target singlet.
    """
    ta, tb, tc = _twice(j_i), _twice(j_j), _twice(j_b)
    ta_new, tb_new = ta + s_i, tb + s_j
    if ta_new < 0 or tb_new < 0 or not _triangle(ta_new, tb_new, tc) or not _triangle(ta, tb, tc):
        return 0.0
    norm = (ta + 1) * (tb + 1 + s_j)
    if norm == 0:
        return 0.0
    result: Dict[Tuple[int, int, int], float] = {}
    for tma in range(-ta, ta + 1, 2):
        for tmb in range(-tb, tb + 1, 2):
            tmc = -tma - tmb
            if abs(tmc) > tc:
                continue
            amp = float(_wigner_3j_twice(ta, tb, tc, tma, tmb, tmc))
            if amp == 0.0:
                continue
            ma, mb = tma / 2.0, tmb / 2.0
            a, b = ta / 2.0, tb / 2.0
            up = (a + s_i * ma + (1 + s_i) / 2) * (b - s_j * mb + (1 + s_j) / 2)
            down = (a - s_i * ma + (1 + s_i) / 2) * (b + s_j * mb + (1 + s_j) / 2)
            key_up = (tma + 1, tmb - 1, tmc)
            key_down = (tma - 1, tmb + 1, tmc)
            result[key_up] = result.get(key_up, 0.0) + s_i * math.sqrt(max(up, 0.0) / norm) * amp
            result[key_down] = result.get(key_down, 0.0) - s_j * math.sqrt(max(down, 0.0) / norm) * amp
    overlap = 0.0
    for (tma, tmb, tmc), amp in result.items():
        if abs(tma) <= ta_new and abs(tmb) <= tb_new:
            overlap += float(_wigner_3j_twice(ta_new, tb_new, tc, tma, tmb, tmc)) * amp
    return overlap


@dataclass(frozen=True)
class LadderBasisState:
    """Gauge-invariant ladder state; spins stored as twice their value."""
    j: Tuple[int, ...]
    j_prime: Tuple[int, ...]
    j_dprime: Tuple[int, ...]

    def __post_init__(self):
        if len(self.j) != len(self.j_prime) or len(self.j_dprime) != len(self.j) + 1:
            raise ValueError("Ladder state needs N lower, N upper and N+1 vertical links")

    @property
    def N(self) -> int:
        return len(self.j)

    def lower(self, i: int) -> int:
        return self.j[i] if 0 <= i < self.N else 0

    def upper(self, i: int) -> int:
        return self.j_prime[i] if 0 <= i < self.N else 0

    def max_twice(self) -> int:
        return max(self.j + self.j_prime + self.j_dprime)

    def is_physical(self) -> bool:
        for i in range(self.N + 1):
            if not _triangle(self.lower(i - 1), self.j_dprime[i], self.lower(i)):
                return False
            if not _triangle(self.upper(i - 1), self.upper(i), self.j_dprime[i]):
                return False
        return True

    def shifted(self, i: int, s_low: int, s_up: int, s_left: int, s_right: int) -> Optional['LadderBasisState']:
        """Apply spin shifts (in units of 1/2) to the four links of plaquette i."""
        j = list(self.j)
        jp = list(self.j_prime)
        jd = list(self.j_dprime)
        j[i] += s_low
        jp[i] += s_up
        jd[i] += s_left
        jd[i + 1] += s_right
        if min(j[i], jp[i], jd[i], jd[i + 1]) < 0:
            return None
        return LadderBasisState(tuple(j), tuple(jp), tuple(jd))

    def describe(self) -> str:
        fmt = lambda ts: ','.join(str(HalfInt(t)) for t in ts)
        return f"j=[{fmt(self.j)}] j'=[{fmt(self.j_prime)}] j''=[{fmt(self.j_dprime)}]"


def enumerate_physical_basis(N: int, j_max: SpinLike) -> List[LadderBasisState]:
    """All gauge-invariant ladder states with every spin <= j_max.

    Ordered by dual-spin string when j_max = 1/2, otherwise by (j, j', j'').
    """
    if N < 1:
        raise ValueError(f"Ladder needs N >= 1 plaquettes, got {N}")
    t_max = HalfInt.of(j_max).twice_value
    states: List[LadderBasisState] = []

    def extend(i: int, j: List[int], jp: List[int], jd: List[int]) -> None:
        prev_low = j[i - 1] if i > 0 else 0
        prev_up = jp[i - 1] if i > 0 else 0
        if i == N:
            for td in range(t_max + 1):
                if _triangle(prev_low, td, 0) and _triangle(prev_up, 0, td):
                    states.append(LadderBasisState(tuple(j), tuple(jp), tuple(jd + [td])))
            return
        for td in range(t_max + 1):
            for tl in range(t_max + 1):
                if not _triangle(prev_low, td, tl):
                    continue
                for tu in range(t_max + 1):
                    if _triangle(prev_up, tu, td):
                        extend(i + 1, j + [tl], jp + [tu], jd + [td])

    extend(0, [], [], [])
    if t_max == 1:
        states.sort(key=dual_spin_map)
    else:
        states.sort(key=lambda s: (s.j, s.j_prime, s.j_dprime))
    logger.debug(f"Enumerated {len(states)} physical states for N={N}, j_max={HalfInt(t_max)}")
    return states


def electric_matrix(basis: Sequence[LadderBasisState]) -> SparseHamiltonian:
    """Diagonal Casimir energy: sum over links of j(j+1)/2."""
    h = SparseHamiltonian(len(basis))
    for k, state in enumerate(basis):
        energy = sum(Fraction(t, 2) * (Fraction(t, 2) + 1) / 2 for t in state.j + state.j_prime + state.j_dprime)
        if energy:
            h.add(k, k, float(energy))
    return h


def plaquette_factor(state: LadderBasisState, i: int, s_low: int, s_up: int,
                     s_left: int, s_right: int) -> SqrtRational:
    """Product of the four corner lambda coefficients of plaquette i (source spins)."""
    jl, ju = state.lower, state.upper
    jd = state.j_dprime
    return (_lambda_twice(s_low, s_right, jl(i), jd[i + 1], jl(i + 1))
            * _lambda_twice(s_right, s_up, jd[i + 1], ju(i), ju(i + 1))
            * _lambda_twice(s_up, s_left, ju(i), jd[i], ju(i - 1))
            * _lambda_twice(s_left, s_low, jd[i], jl(i), jl(i - 1)))


def magnetic_transitions(state: LadderBasisState) -> Iterator[Tuple[int, LadderBasisState, SqrtRational]]:
    """Yield (plaquette, target, factor) for every nonzero plaquette transition out of ``state``."""
    for i in range(state.N):
        for signs in itertools.product((1, -1), repeat=4):
            target = state.shifted(i, *signs)
            if target is None:
                continue
            factor = plaquette_factor(state, i, *signs)
            if factor:
                yield i, target, factor


def plaquette_matrix(basis: Sequence[LadderBasisState], dagger: bool = False) -> SparseHamiltonian:
    """Matrix of sum_i tr U_plaquette(i) in ``basis``; ``dagger`` gives the conjugate plaquette.

    Transitions leaving the truncated basis are dropped.
    """
    index = {state: k for k, state in enumerate(basis)}
    h = SparseHamiltonian(len(basis))
    dropped = 0
    for k, state in enumerate(basis):
        for _, target, factor in magnetic_transitions(state):
            row = index.get(target)
            if row is None:
                dropped += 1
                continue
            if dagger:
                h.add(k, row, float(factor))
            else:
                h.add(row, k, float(factor))
    if dropped:
        logger.debug(f"Dropped {dropped} plaquette transitions outside the truncated basis")
    return h


def magnetic_matrix(basis: Sequence[LadderBasisState], K: float) -> SparseHamiltonian:
    """Plaquette Hamiltonian -K sum_i tr U_plaquette(i) in ``basis``."""
    h = SparseHamiltonian(len(basis))
    if K == 0:
        return h
    for row, col, value in plaquette_matrix(basis).entries:
        h.add(row, col, -K * value)
    return h


def constructive_hamiltonian(N: int, K: float, j_max: SpinLike = Fraction(1, 2)) -> Tuple[List[LadderBasisState], SparseHamiltonian]:
    """Basis and electric + magnetic Hamiltonian built from the gauge theory."""
    basis = enumerate_physical_basis(N, j_max)
    return basis, electric_matrix(basis) + magnetic_matrix(basis, K)


def dual_spin_map(state: LadderBasisState) -> str:
    """Loop configuration to dual-spin bits ('0' = up, j_i = 0; '1' = down, j_i = 1/2).

    Raises:
        ValueError: for spins above 1/2
    """
    if state.max_twice() > 1:
        raise ValueError(f"Dual-spin map needs j_max = 1/2, got {state.describe()}")
    return ''.join(str(t) for t in state.j)


def dual_spin_inverse(bits: str) -> LadderBasisState:
    """Dual-spin bits to the loop configuration: j = j' = bit/2, j''_i = (bit_{i-1} xor bit_i)/2."""
    if not bits or any(b not in '01' for b in bits):
        raise ValueError(f"Invalid dual-spin string {bits!r}")
    z = [int(b) for b in bits]
    padded = [0] + z + [0]
    jd = tuple(padded[i] ^ padded[i + 1] for i in range(len(z) + 1))
    return LadderBasisState(tuple(z), tuple(z), jd)


def dual_basis_hamiltonian(N: int, K: float) -> np.ndarray:
    """Dense constructive Hamiltonian reordered into the computational basis of the dual spins."""
    basis, h = constructive_hamiltonian(N, K, Fraction(1, 2))
    perm = np.array([int(dual_spin_map(s), 2) for s in basis])
    dense = np.zeros((1 << N, 1 << N))
    dense[np.ix_(perm, perm)] = h.to_dense()
    return dense


def ym_ising_closed_form(N: int, K: float) -> PauliHamiltonian:
    """Spin form sum_i 3/16 (3 - 2Z_i - Z_{i-1}Z_i) - K/16 sum_i X_i (1+3Z_{i-1})(1+3Z_{i+1}).

    Z_{-1} = Z_N = 1; identity-valued factors are folded into lower-weight terms.
    """
    if N < 1:
        raise ValueError(f"Yang-Mills-Ising chain needs N >= 1, got {N}")
    ham = PauliHamiltonian(N)
    ident = 'I' * N

    def z_ops(sites: Sequence[int]) -> Dict[int, str]:
        return {s: 'Z' for s in sites if 0 <= s < N}

    for i in range(N + 1):
        ham.add_term(9.0 / 16.0, ident)
        if i < N:
            ham.add_term(-6.0 / 16.0, pauli_string(N, {i: 'Z'}))
        ham.add_term(-3.0 / 16.0, pauli_string(N, z_ops([i - 1, i])))
        if i == N:
            # Z_N = 1 in the -2Z_N term
            ham.add_term(-6.0 / 16.0, ident)
    for i in range(N):
        for left, right, weight in ((False, False, 1), (True, False, 3), (False, True, 3), (True, True, 9)):
            sites = ([i - 1] if left else []) + ([i + 1] if right else [])
            ops = z_ops(sites)
            ops[i] = 'X'
            ham.add_term(-K * weight / 16.0, pauli_string(N, ops))
    return ham.simplify()


def plaquette_action(i: int, state: str) -> Tuple[float, str]:
    """Apply tr U_plaquette(i) to a dual-spin basis state.

    Returns:
        (amplitude, out_state) with bit i flipped
    """
    if not 0 <= i < len(state):
        raise ValueError(f"Plaquette {i} out of range for {len(state)} sites")
    source = dual_spin_inverse(state)
    flipped = state[:i] + ('1' if state[i] == '0' else '0') + state[i + 1:]
    target = dual_spin_inverse(flipped)
    signs = (target.j[i] - source.j[i], target.j_prime[i] - source.j_prime[i],
             target.j_dprime[i] - source.j_dprime[i], target.j_dprime[i + 1] - source.j_dprime[i + 1])
    return float(plaquette_factor(source, i, *signs)), flipped
