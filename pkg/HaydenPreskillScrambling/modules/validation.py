"""Fast invariant suite run by the ``validate`` subcommand."""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Tuple

import numpy as np

from .circuits import (
    Circuit,
    IsingParams,
    TrotterSpec,
    YmParams,
    build_epr_prep,
    build_trotter_ising,
    build_trotter_ym,
)
from .config import ISING_PARAMETER_SETS, YM_COUPLINGS
from .engine import RngStream, sample_haar_unitary
from .experiment_manager import ConfigError, ExperimentConfig, evolution_at
from .gauge import dual_basis_hamiltonian, lambda_coeff, plaquette_action, ym_ising_closed_form
from .protocol import (
    NoiseSpec,
    haar_p_epr_exact,
    make_layout,
    run_hp_channel_exact,
    run_hp_ideal,
)

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ''


@dataclass
class ValidationReport:
    config_errors: List[ConfigError] = field(default_factory=list)
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.config_errors and all(c.passed for c in self.checks)

    def print_report(self) -> None:
        print('\n' + '=' * 70)
        print('VALIDATION REPORT')
        print('=' * 70)
        for error in self.config_errors:
            print(f"  CONFIG  {error.field}: {error.message}")
        for check in self.checks:
            status = 'PASS' if check.passed else 'FAIL'
            print(f"  {status:<6}  {check.name}" + (f"  ({check.detail})" if check.detail else ''))
        print('=' * 70)
        print(f"Result: {'all checks passed' if self.passed else 'FAILED'}")
        print('=' * 70)


def _check_identity_anchor(config: ExperimentConfig) -> Tuple[bool, str]:
    layout = config.make_layout()
    result = run_hp_ideal(layout, Circuit(layout.N))
    expected_f = 1.0 / layout.d_A ** 2
    ok = abs(result.p_epr - 1.0) < 1e-12 and abs(result.f_epr - expected_f) < 1e-12
    return ok, f"p={result.p_epr:.12f}, f={result.f_epr:.12f}"


def _check_ideal_identity(config: ExperimentConfig) -> Tuple[bool, str]:
    """f p d_A^2 = 1 and the lower bound on p at the first, middle and last grid points."""
    layout = config.make_layout()
    bound = max(1.0 / layout.d_A ** 2, 1.0 / layout.d_D ** 2) - 1e-9
    worst = 0.0
    ok = True
    grid = config.time_grid()
    for t, M, dt in [grid[k] for k in sorted({0, len(grid) // 2, len(grid) - 1})]:
        result = run_hp_ideal(layout, evolution_at(config, M, dt), t)
        worst = max(worst, abs(result.f_epr * result.p_epr * layout.d_A ** 2 - 1.0))
        ok = ok and result.p_epr >= bound
    return ok and worst < 1e-9, f"max |f p d_A^2 - 1| = {worst:.2e}"


def _check_cnot_counts() -> Tuple[bool, str]:
    for N in range(2, 11):
        ising = build_trotter_ising(IsingParams(N, 1.0, 0.5), TrotterSpec(0.1, 1)).cnot_count()
        ym = build_trotter_ym(YmParams(N, 2.0), TrotterSpec(0.5, 1)).cnot_count()
        if ising != 2 * (N - 1) or ym != 10 * N - 14:
            return False, f"N={N}: ising {ising}, ym {ym}"
    prep = build_epr_prep([(0, 1), (2, 3), (4, 5)])
    return prep.cnot_count() == 3, "2(N-1) and 10N-14 per step for N in 2..10"


def _check_haar_closed_form() -> Tuple[bool, str]:
    p = haar_p_epr_exact(2, 128, 64, 4)
    return p == Fraction(19455, 65535), f"P_Haar = {p}"


def _check_gauge_equivalence() -> Tuple[bool, str]:
    worst = 0.0
    for N in range(1, 5):
        for K in YM_COUPLINGS:
            diff = np.max(np.abs(ym_ising_closed_form(N, K).to_dense() - dual_basis_hamiltonian(N, K)))
            worst = max(worst, float(diff))
    return worst < 1e-12, f"max abs difference {worst:.2e}"


def _check_gauge_tables() -> Tuple[bool, str]:
    half = Fraction(1, 2)
    lambdas = [lambda_coeff(1, 1, 0, 0, 0), lambda_coeff(-1, -1, half, half, 0),
               lambda_coeff(1, -1, 0, half, half), lambda_coeff(-1, 1, half, 0, half)]
    ok = np.allclose(lambdas, [1.0, 1.0, -1.0, 0.5], atol=1e-15)
    expected = {'000': 1.0, '010': 1.0, '001': -0.5, '011': -0.5,
                '110': -0.5, '100': -0.5, '101': 0.25, '111': 0.25}
    for state, amplitude in expected.items():
        value, _ = plaquette_action(1, state)
        ok = ok and abs(value - amplitude) < 1e-15
    return bool(ok), "four vertex coefficients, eight plaquette actions"


def _check_decohered_identities() -> Tuple[bool, str]:
    layout = make_layout(3, 1, 1)
    u = sample_haar_unitary(2 ** layout.N, RngStream(7))
    ideal = run_hp_ideal(layout, u)
    worst = 0.0
    for p in (0.0, 0.05, 0.2, 1.0):
        result = run_hp_channel_exact(layout, u, NoiseSpec(p, 'whole_unitary'))
        expected = (1 - p) ** 2 * ideal.p_epr + (2 * p - p * p) / layout.d_D ** 2
        worst = max(worst, abs(result.p_epr - expected),
                    abs(layout.d_A ** 2 * result.f_epr - 2 ** result.diagnostics['i2']))
    return worst < 1e-9, f"max deviation {worst:.2e}"


def _run(name: str, check: Callable[[], Tuple[bool, str]]) -> CheckResult:
    try:
        passed, detail = check()
    except Exception as e:
        logger.error(f"Check '{name}' raised: {e}", exc_info=True)
        return CheckResult(name, False, f"raised {type(e).__name__}: {e}")
    logger.info(f"{'PASS' if passed else 'FAIL'}: {name}")
    return CheckResult(name, passed, detail)


def validate(config: ExperimentConfig) -> ValidationReport:
    """Validate ``config`` and, if it is usable, run the fast invariant suite.

    Failures are carried by the report; nothing is raised.
    """
    report = ValidationReport(config_errors=config.validate())
    if report.config_errors:
        for error in report.config_errors:
            logger.error(f"Invalid config: {error}")
        return report
    checks = [
        ('identity circuit gives (1, 1/d_A^2)', lambda: _check_identity_anchor(config)),
        ('CNOT counts', _check_cnot_counts),
        ('Haar closed form', _check_haar_closed_form),
        ('gauge closed form equals constructive Hamiltonian', _check_gauge_equivalence),
        ('vertex and plaquette tables', _check_gauge_tables),
        ('decohered channel identities', _check_decohered_identities),
    ]
    if config.model.name != 'haar':
        checks.insert(1, ('ideal identity and lower bound', lambda: _check_ideal_identity(config)))
    for name, check in checks:
        report.checks.append(_run(name, check))
    for label, (h, m) in ISING_PARAMETER_SETS.items():
        params_config = config.copy()
        params_config.model.name, params_config.model.h, params_config.model.m = 'ising', h, m
        params_config.model.evolution = 'trotter'
        if params_config.validate():
            continue
        report.checks.append(_run(f"ideal identity, {label} Ising", lambda c=params_config: _check_ideal_identity(c)))
    return report
