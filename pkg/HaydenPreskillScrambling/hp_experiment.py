"""Command-line driver for Hayden-Preskill scrambling experiments."""
import argparse
import logging
import sys
from typing import Dict, List, Optional

from .modules.config import MODELS, NOISE_SCOPES, PLACEMENTS, SWEEP_AXES
from .modules.experiment_manager import (
    MODES,
    ConfigError,
    ExperimentConfig,
    build_ym_artifacts,
    run_experiment,
    run_sweep,
)
from .modules.file_controller import load_config_file
from .modules.validation import validate

SUBCOMMAND_MODES = {
    'hp-ideal': 'ideal',
    'hp-noisy': 'trajectories',
    'hp-channel': 'channel',
    'teleport-state': 'teleport',
    'otoc-mc': 'otoc',
}

# argparse destination -> (section, field) of ExperimentConfig
FLAG_FIELDS = {
    'seed': (None, 'seed'),
    'model': ('model', 'name'),
    'h': ('model', 'h'),
    'm': ('model', 'm'),
    'K': ('model', 'K'),
    'evolution': ('model', 'evolution'),
    'N': ('layout', 'N'),
    'N_A': ('layout', 'N_A'),
    'N_D': ('layout', 'N_D'),
    'placement': ('layout', 'placement'),
    'a_sites': ('layout', 'a_sites'),
    'd_sites': ('layout', 'd_sites'),
    'dt': ('trotter', 'dt'),
    't_max': ('trotter', 't_max'),
    't_values': ('trotter', 't_values'),
    'M': ('trotter', 'M'),
    'p': ('noise', 'p'),
    'scope': ('noise', 'scope'),
    'n_traj': ('noise', 'n_traj'),
    'bootstrap': ('noise', 'n_bootstrap'),
    'haar_samples': ('sampling', 'haar_samples'),
    'psi_samples': ('sampling', 'psi_samples'),
    'otoc_samples': ('sampling', 'otoc_samples'),
    'axis': ('sweep', 'axis'),
    'values': ('sweep', 'values'),
    'window': ('sweep', 'window'),
    'output': ('output', 'csv'),
    'json': ('output', 'json'),
    'dump_circuit': ('output', 'dump_circuit'),
    'dump_hamiltonian': ('output', 'dump_hamiltonian'),
}


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge the JSON config file (if any) with command-line flags; flags win.

    Raises:
        ConfigError: for unknown keys or a config file that is not a JSON object
    """
    data: Dict = {}
    if getattr(args, 'config', None):
        try:
            data = load_config_file(args.config)
        except ValueError as e:
            raise ConfigError('config', str(e)) from e
    config = ExperimentConfig.from_dict(data)
    mode = SUBCOMMAND_MODES.get(args.command) or getattr(args, 'mode', None)
    if mode:
        config.mode = mode
    for dest, (section, name) in FLAG_FIELDS.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        target = config if section is None else getattr(config, section)
        setattr(target, name, value)
    if getattr(args, 'entropies', False):
        config.sampling.entropies = True
    if getattr(args, 'window_kt', False):
        config.sweep.window_in_kt = True
    if getattr(args, 'verbose', False):
        config.output.progress = True
    placement_given = getattr(args, 'placement', None) or 'placement' in data.get('layout', {})
    if config.model.name == 'ym' and not placement_given:
        config.layout.placement = 'ym_default'
    return config


class ExperimentRunner:
    """Runs one subcommand and reports the outcome."""

    def __init__(self, args: argparse.Namespace):
        """Initialize the runner with parsed arguments.

        Args:
            args: parsed command-line namespace
        """
        self.args = args
        self.logger = logging.getLogger(__name__)

    def setup_logging(self) -> None:
        """Configure logging for the application."""
        level = logging.DEBUG if self.args.verbose else logging.INFO
        logging.basicConfig(
            level=level,
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )

    def print_config_errors(self, errors: List[ConfigError]) -> None:
        print('\n' + '=' * 70)
        print('INVALID CONFIGURATION')
        print('=' * 70)
        for error in errors:
            print(f"  {error.field}: {error.message}")
        print('=' * 70)

    def print_summary(self, rows: List[Dict]) -> None:
        """Print the first and last rows of a run."""
        print('\n' + '=' * 70)
        print('EXPERIMENT SUMMARY')
        print('=' * 70)
        print(f"Rows written: {len(rows)}")
        for label, row in (('first', rows[0]), ('last', rows[-1])) if rows else ():
            print(f"  {label:<5}  t={row['t']:<8g} P_EPR={row['p_epr']:.6f} ± {row['p_err']:.2e}  "
                  f"F_EPR={row['f_epr']:.6f} ± {row['f_err']:.2e}")
        print('=' * 70)

    def run_ym_build(self) -> int:
        summary = build_ym_artifacts(self.args.N, self.args.K, self.args.prefix)
        print('\n' + '=' * 70)
        print('YANG-MILLS-ISING HAMILTONIAN')
        print('=' * 70)
        for key, value in summary.items():
            print(f"  {key:<18} {value}")
        print('=' * 70)
        return 0 if summary['max_abs_diff'] < 1e-12 else 1

    def run(self) -> int:
        """Execute the selected subcommand.

        Returns:
            0 on success, 1 on a runtime failure or a failed check, 2 on an invalid configuration
        """
        self.setup_logging()
        try:
            if self.args.command == 'ym-build':
                return self.run_ym_build()

            config = build_config(self.args)
            if self.args.command == 'validate':
                report = validate(config)
                report.print_report()
                if report.config_errors:
                    return 2
                return 0 if report.passed else 1

            errors = config.validate()
            if self.args.command == 'sweep' and config.sweep.axis is None:
                errors.append(ConfigError('sweep.axis', "a sweep needs --axis or sweep.axis in the config file"))
            if errors:
                self.print_config_errors(errors)
                return 2

            if self.args.command == 'sweep':
                frame, summary = run_sweep(config, workers=self.args.workers)
                self.print_summary(frame.to_dict(orient='records'))
                print(summary.to_string(index=False))
                return 0

            rows = run_experiment(config)
            self.print_summary(rows)
            return 0

        except ConfigError as e:
            self.print_config_errors([e])
            return 2
        except Exception as e:
            self.logger.error(f"Fatal error: {e}", exc_info=True)
            return 1


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', type=str, metavar='FILE', help='JSON experiment config')
    parser.add_argument('--seed', type=int, help='Master seed')
    parser.add_argument('--model', choices=MODELS, help='ising, ym (Yang-Mills-Ising) or haar')
    parser.add_argument('--h', type=float, help='Ising transverse field')
    parser.add_argument('--m', type=float, help='Ising longitudinal field')
    parser.add_argument('--K', type=float, help='Yang-Mills magnetic coupling')
    parser.add_argument('--evolution', choices=('trotter', 'exact'), help='Trotter circuit or exact e^{-iHt}')
    parser.add_argument('--N', type=int, help='System qubits')
    parser.add_argument('--N-A', dest='N_A', type=int, help='Input qubits')
    parser.add_argument('--N-D', dest='N_D', type=int, help='Output diagnostic qubits')
    parser.add_argument('--placement', choices=PLACEMENTS, help='Rule for the A and D sites')
    parser.add_argument('--a-sites', type=int, nargs='+', help='Explicit A sites')
    parser.add_argument('--d-sites', type=int, nargs='+', help='Explicit D sites')
    parser.add_argument('--dt', type=float, help='Trotter step (default 0.1 Ising, 0.5 Yang-Mills)')
    parser.add_argument('--t-max', type=float, help='Last time of the grid')
    parser.add_argument('--t-values', type=float, nargs='+', help='Explicit time grid')
    parser.add_argument('--M', type=int, help='Fixed Trotter step count per time point')
    parser.add_argument('--p', type=float, help='Depolarizing probability')
    parser.add_argument('--scope', choices=NOISE_SCOPES, help='Where noise acts')
    parser.add_argument('--n-traj', type=int, help='Trajectories')
    parser.add_argument('--bootstrap', type=int, help='Bootstrap resamples')
    parser.add_argument('--haar-samples', type=int, help='Haar unitaries for the haar model')
    parser.add_argument('--psi-samples', type=int, help='Haar input states for teleport-state')
    parser.add_argument('--otoc-samples', type=int, help='Pauli pairs for otoc-mc')
    parser.add_argument('--entropies', action='store_true', help='Add mutual-information columns')
    parser.add_argument('--output', type=str, metavar='FILE', help='Output CSV path (default: outputs/results.csv)')
    parser.add_argument('--json', type=str, metavar='FILE', help='Also write JSON results')
    parser.add_argument('--dump-circuit', type=str, metavar='FILE', help='Write one Trotter step as text')
    parser.add_argument('--dump-hamiltonian', type=str, metavar='FILE', help='Write the Pauli Hamiltonian as text')
    parser.add_argument('--verbose', action='store_true', help='Enable verbose logging (DEBUG level) and progress bars')


def create_argument_parser() -> argparse.ArgumentParser:
    """Create and configure the command line argument parser.

    Returns:
        Configured ArgumentParser instance
    """
    parser = argparse.ArgumentParser(
        description='Hayden-Preskill information scrambling experiments on spin and gauge chains',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s hp-ideal --model ising --h -1.05 --m 0.5 --t-max 40     # chaotic Ising, ideal
  %(prog)s hp-noisy --N 4 --p 0.01 --n-traj 10000 --t-values 1     # trajectories
  %(prog)s hp-channel --N 4 --p 0.05 --scope whole_unitary          # exact channel
  %(prog)s sweep --model ym --axis K --values 0.5 2 --window 50 100 --window-kt
  %(prog)s ym-build --N 4 --K 2 --prefix outputs/ym_N4
  %(prog)s validate --config experiment.json
        """
    )
    subparsers = parser.add_subparsers(dest='command', required=True)
    for command, help_text in (
        ('hp-ideal', 'Noiseless protocol over the time grid'),
        ('hp-noisy', 'Noisy protocol by quantum trajectories'),
        ('hp-channel', 'Noisy protocol by exact density-matrix evolution'),
        ('teleport-state', 'Teleport Haar-random input states'),
        ('otoc-mc', 'Monte-Carlo averaged OTOC against P_EPR'),
        ('validate', 'Check the config and run the fast invariant suite'),
    ):
        _add_common_arguments(subparsers.add_parser(command, help=help_text))

    sweep = subparsers.add_parser('sweep', help='Cross product of the base config with one axis')
    _add_common_arguments(sweep)
    sweep.add_argument('--mode', choices=MODES, default=None, help='Run mode of each grid point (default: ideal)')
    sweep.add_argument('--axis', choices=SWEEP_AXES, help='Sweep axis')
    sweep.add_argument('--values', type=float, nargs='+', help='Axis values')
    sweep.add_argument('--window', type=float, nargs=2, metavar=('LO', 'HI'), help='Late-time averaging window')
    sweep.add_argument('--window-kt', action='store_true', help='Interpret the window in K*t')
    sweep.add_argument('--workers', type=int, default=1, help='Worker processes (default: %(default)s)')

    ym = subparsers.add_parser('ym-build', help='Build and compare the Yang-Mills-Ising Hamiltonians')
    ym.add_argument('--N', type=int, required=True, help='Plaquettes')
    ym.add_argument('--K', type=float, default=2.0, help='Magnetic coupling (default: %(default)s)')
    ym.add_argument('--prefix', type=str, metavar='PATH', help='Write basis and matrix dumps with this prefix')
    ym.add_argument('--verbose', action='store_true', help='Enable verbose logging (DEBUG level)')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments and run the selected subcommand.

    Returns:
        Exit code (0 success, 1 failure, 2 invalid configuration)
    """
    parser = create_argument_parser()
    args = parser.parse_args(argv)
    runner = ExperimentRunner(args)
    return runner.run()


if __name__ == "__main__":
    sys.exit(main())
