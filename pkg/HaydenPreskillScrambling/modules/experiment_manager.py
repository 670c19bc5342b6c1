"""Experiment configuration and orchestration: time grids, runs, sweeps and aggregation."""
import copy
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union, get_args, get_origin

import numpy as np
import pandas as pd
from tqdm import tqdm

from .circuits import (
    Circuit,
    IsingParams,
    TrotterSpec,
    YmParams,
    build_trotter_ising,
    build_trotter_ym,
    circuit_to_text,
)
from .config import (
    DEFAULT_BOOTSTRAP,
    DEFAULT_DT_ISING,
    DEFAULT_DT_YM,
    DEFAULT_HAAR_SAMPLES,
    DEFAULT_N_TRAJ,
    DEFAULT_OTOC_SAMPLES,
    DEFAULT_PSI_SAMPLES,
    DEFAULT_RESULTS_CSV,
    DEFAULT_SCOPE,
    DEFAULT_SEED,
    MAX_DENSITY_QUBITS,
    MAX_EXACT_QUBITS,
    MODELS,
    NOISE_SCOPES,
    PLACEMENTS,
    SWEEP_AXES,
)
from .engine import DenseUnitary, RngStream, SpectralPropagator, haar_random_state
from .file_controller import resolve_output_path, save_results_csv, save_results_json, sibling_path, write_text
from .gauge import (
    constructive_hamiltonian,
    dual_basis_hamiltonian,
    dual_spin_map,
    electric_matrix,
    magnetic_matrix,
    ym_ising_closed_form,
)
from .hamiltonian import PauliHamiltonian, ising_hamiltonian
from .protocol import (
    Evolution,
    HpResult,
    NoiseSpec,
    ProtocolLayout,
    averaged_otoc_mc,
    channel_time_series,
    haar_baselines,
    ideal_time_series,
    make_layout,
    run_haar_samples,
    run_hp_ideal,
    run_state_teleportation,
    scrambling_entropies,
    trajectory_time_series,
)

logger = logging.getLogger(__name__)

MODES = ('ideal', 'trajectories', 'channel', 'teleport', 'otoc')
EVOLUTIONS = ('trotter', 'exact')


class ConfigError(ValueError):
    """Invalid configuration value, addressed by its dotted field path."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


@dataclass
class ModelConfig:
    name: str = 'ising'
    h: float = -1.05
    m: float = 0.5
    K: float = 2.0
    evolution: str = 'trotter'


@dataclass
class LayoutConfig:
    N: int = 8
    N_A: int = 1
    N_D: int = 2
    placement: str = 'ising_default'
    a_sites: Optional[List[int]] = None
    d_sites: Optional[List[int]] = None


@dataclass
class TrotterConfig:
    """Time grid.

    Attributes:
        dt: Trotter step (None picks the model default)
        t_max: last time of the grid 0, dt, ..., t_max
        t_values: explicit times, overriding t_max
        M: fixed step count per time point (dt becomes t/M)
    """
    dt: Optional[float] = None
    t_max: float = 5.0
    t_values: Optional[List[float]] = None
    M: Optional[int] = None


@dataclass
class NoiseConfig:
    p: float = 0.0
    scope: str = DEFAULT_SCOPE
    n_traj: int = DEFAULT_N_TRAJ
    n_bootstrap: int = DEFAULT_BOOTSTRAP


@dataclass
class SamplingConfig:
    haar_samples: int = DEFAULT_HAAR_SAMPLES
    psi_samples: int = DEFAULT_PSI_SAMPLES
    otoc_samples: int = DEFAULT_OTOC_SAMPLES
    entropies: bool = False


@dataclass
class SweepConfig:
    """Sweep axis and late-time aggregation window.

    Attributes:
        window: [lo, hi] averaging window in t (or in K*t when window_in_kt)
    """
    axis: Optional[str] = None
    values: List[float] = field(default_factory=list)
    window: Optional[List[float]] = None
    window_in_kt: bool = False


@dataclass
class OutputConfig:
    csv: Optional[str] = DEFAULT_RESULTS_CSV
    json: Optional[str] = None
    dump_circuit: Optional[str] = None
    dump_hamiltonian: Optional[str] = None
    progress: bool = False


@dataclass
class ExperimentConfig:
    """Complete description of one experiment (or of the base point of a sweep)."""
    mode: str = 'ideal'
    seed: int = DEFAULT_SEED
    model: ModelConfig = field(default_factory=ModelConfig)
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    trotter: TrotterConfig = field(default_factory=TrotterConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @classmethod
    def from_dict(cls, data: Dict) -> 'ExperimentConfig':
        """Build a config from nested dicts.

        Raises:
            ConfigError: for unknown keys or a section that is not a mapping
        """
        return _from_dict(cls, data, '')

    def to_dict(self) -> Dict:
        return asdict(self)

    def copy(self) -> 'ExperimentConfig':
        return copy.deepcopy(self)

    @property
    def dt(self) -> float:
        if self.trotter.dt is not None:
            return float(self.trotter.dt)
        return DEFAULT_DT_YM if self.model.name == 'ym' else DEFAULT_DT_ISING

    def time_grid(self) -> List[Tuple[float, int, float]]:
        """(t, M, dt) per grid point; M = round(t/dt) unless a fixed M is configured."""
        if self.trotter.t_values is not None:
            times = [float(t) for t in self.trotter.t_values]
        else:
            n_points = int(round(self.trotter.t_max / self.dt))
            times = [k * self.dt for k in range(n_points + 1)]
        if self.trotter.M is not None:
            return [(t, self.trotter.M if t > 0 else 0, t / self.trotter.M) for t in times]
        return [(t, int(round(t / self.dt)), self.dt) for t in times]

    def validate(self) -> List[ConfigError]:
        """Collect every invalid field; an empty list means the config is usable."""
        errors: List[ConfigError] = []

        def check(condition: bool, path: str, message: str) -> None:
            if not condition:
                errors.append(ConfigError(path, message))

        model, layout, trotter, noise = self.model, self.layout, self.trotter, self.noise
        check(self.mode in MODES, 'mode', f"must be one of {MODES}, got {self.mode!r}")
        check(model.name in MODELS, 'model.name', f"must be one of {MODELS}, got {model.name!r}")
        check(model.evolution in EVOLUTIONS, 'model.evolution', f"must be one of {EVOLUTIONS}")
        check(model.K >= 0, 'model.K', f"must be >= 0, got {model.K}")
        check(layout.N >= 2, 'layout.N', f"must be >= 2, got {layout.N}")
        check(1 <= layout.N_A <= layout.N, 'layout.N_A', f"must lie in [1, N={layout.N}], got {layout.N_A}")
        check(1 <= layout.N_D <= layout.N, 'layout.N_D', f"must lie in [1, N={layout.N}], got {layout.N_D}")
        check(layout.placement in PLACEMENTS, 'layout.placement', f"must be one of {PLACEMENTS}")
        if layout.placement == 'explicit':
            check(layout.a_sites is not None and layout.d_sites is not None, 'layout.a_sites',
                  "explicit placement needs a_sites and d_sites")
        if not errors:
            try:
                self.make_layout()
            except ValueError as e:
                errors.append(ConfigError('layout', str(e)))
        check(self.dt > 0, 'trotter.dt', f"must be > 0, got {self.dt}")
        check(trotter.t_max >= 0, 'trotter.t_max', f"must be >= 0, got {trotter.t_max}")
        if trotter.t_values is not None:
            t_values = list(trotter.t_values)
            check(len(t_values) > 0, 'trotter.t_values', "must not be empty")
            check(all(b > a for a, b in zip(t_values, t_values[1:])), 'trotter.t_values',
                  "must be strictly increasing")
            check(all(t >= 0 for t in t_values), 'trotter.t_values', "must be >= 0")
            if trotter.M is None and self.dt > 0:
                check(all(abs(round(t / self.dt) * self.dt - t) < 1e-9 for t in t_values),
                      'trotter.t_values', f"must be multiples of dt={self.dt}")
        check(trotter.M is None or trotter.M >= 1, 'trotter.M', f"must be >= 1, got {trotter.M}")
        check(0.0 <= noise.p <= 1.0, 'noise.p', f"must lie in [0, 1], got {noise.p}")
        check(noise.scope in NOISE_SCOPES, 'noise.scope', f"must be one of {NOISE_SCOPES}")
        check(noise.n_traj >= 1, 'noise.n_traj', f"must be >= 1, got {noise.n_traj}")
        if self.mode == 'trajectories':
            check(noise.scope != 'whole_unitary', 'noise.scope',
                  "whole_unitary noise is only available in channel mode")
            check(model.evolution == 'trotter', 'model.evolution', "trajectories need a Trotter circuit")
        if self.mode == 'channel':
            total = 2 * layout.N + 2 * layout.N_A
            check(total <= MAX_DENSITY_QUBITS, 'layout.N',
                  f"channel mode needs 2N + 2N_A <= {MAX_DENSITY_QUBITS}, got {total}")
            if noise.scope != 'whole_unitary':
                check(model.evolution == 'trotter', 'model.evolution', "per-CNOT noise needs a Trotter circuit")
        if model.name == 'haar':
            check(self.mode == 'ideal', 'mode', "the haar model runs in ideal mode only")
        if model.name == 'haar' or model.evolution == 'exact' or self.mode == 'otoc':
            check(layout.N <= MAX_EXACT_QUBITS, 'layout.N',
                  f"dense evolution limited to N <= {MAX_EXACT_QUBITS}")
        if self.sweep.axis is not None:
            check(self.sweep.axis in SWEEP_AXES, 'sweep.axis', f"must be one of {SWEEP_AXES}")
            check(len(self.sweep.values) > 0, 'sweep.values', "must not be empty")
        if self.sweep.window is not None:
            check(len(self.sweep.window) == 2 and self.sweep.window[0] <= self.sweep.window[1],
                  'sweep.window', "must be [lo, hi] with lo <= hi")
        return errors

    def make_layout(self) -> ProtocolLayout:
        return make_layout(self.layout.N, self.layout.N_A, self.layout.N_D, self.layout.placement,
                           self.layout.a_sites, self.layout.d_sites)

    def rng(self) -> RngStream:
        return RngStream(self.seed)


def _from_dict(cls, data: Dict, prefix: str):
    if not isinstance(data, dict):
        raise ConfigError(prefix.rstrip('.') or 'config', f"expected a mapping, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        path = f"{prefix}{key}"
        if key not in known:
            raise ConfigError(path, "unknown key")
        default = known[key].default_factory() if callable(known[key].default_factory) else None
        if is_dataclass(default):
            kwargs[key] = _from_dict(type(default), value, f"{path}.")
        else:
            _check_type(value, known[key].type, path)
            kwargs[key] = value
    return cls(**kwargs)


_TYPE_NAMES = {float: 'number', int: 'integer', str: 'string', bool: 'boolean'}


def _check_type(value, annotation, path: str) -> None:
    """Raise ConfigError when a JSON value does not match the field annotation."""
    if get_origin(annotation) is Union:
        args = [a for a in get_args(annotation) if a is not type(None)]
        if value is None:
            return
        annotation = args[0]
    if get_origin(annotation) is list:
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {type(value).__name__}")
        (item_type,) = get_args(annotation)
        for i, item in enumerate(value):
            _check_type(item, item_type, f"{path}[{i}]")
        return
    if annotation is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif annotation is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif annotation in (str, bool):
        ok = isinstance(value, annotation)
    else:
        return
    if not ok:
        raise ConfigError(path, f"expected {_TYPE_NAMES[annotation]}, got {type(value).__name__}")


# -- model evolutions --------------------------------------------------------

def model_hamiltonian(config: ExperimentConfig) -> PauliHamiltonian:
    """Pauli Hamiltonian of the configured model."""
    N = config.layout.N
    if config.model.name == 'ising':
        return ising_hamiltonian(N, config.model.h, config.model.m)
    if config.model.name == 'ym':
        return ym_ising_closed_form(N, config.model.K)
    raise ValueError(f"Model {config.model.name} has no Hamiltonian")


def step_circuit(config: ExperimentConfig, dt: float) -> Circuit:
    """One Trotter step of length dt."""
    N = config.layout.N
    if config.model.name == 'ising':
        return build_trotter_ising(IsingParams(N, config.model.h, config.model.m), TrotterSpec(dt, 1))
    if config.model.name == 'ym':
        return build_trotter_ym(YmParams(N, config.model.K), TrotterSpec(dt, 1))
    raise ValueError(f"Model {config.model.name} has no Trotter circuit")


def step_evolution(config: ExperimentConfig, dt: float,
                   propagator: Optional[SpectralPropagator] = None) -> Evolution:
    """Trotter step circuit, or the exact e^{-iH dt} in exact mode."""
    if config.model.evolution == 'exact':
        propagator = propagator or SpectralPropagator(model_hamiltonian(config))
        return propagator.unitary(dt)
    return step_circuit(config, dt)


def evolution_at(config: ExperimentConfig, M: int, dt: float) -> Evolution:
    """Full evolution for M steps of length dt."""
    step = step_evolution(config, dt)
    if isinstance(step, DenseUnitary):
        return DenseUnitary(np.linalg.matrix_power(step.matrix, M), check=False)
    return step.repeat(M)


def _noise_spec(config: ExperimentConfig) -> NoiseSpec:
    return NoiseSpec(p=config.noise.p, scope=config.noise.scope, n_traj=config.noise.n_traj,
                     rng=config.rng(), n_bootstrap=config.noise.n_bootstrap)


def _base_row(config: ExperimentConfig, layout: ProtocolLayout, t: float, M: int, dt: float) -> Dict:
    """Parameter echo of a result row."""
    model = config.model
    noisy = config.mode in ('trajectories', 'channel')
    return {
        'model': model.name, 'N': layout.N, 'N_A': layout.N_A, 'N_D': layout.N_D,
        'placement': layout.placement, 't': t, 'dt': dt, 'M': M,
        'K': model.K if model.name == 'ym' else None,
        'h': model.h if model.name == 'ising' else None,
        'm': model.m if model.name == 'ising' else None,
        'p': config.noise.p if noisy else 0.0,
        'scope': config.noise.scope if noisy else 'none',
        'seed': config.seed,
    }


def _series(config: ExperimentConfig, layout: ProtocolLayout, step: Evolution, n_steps: int, dt: float,
            record: Sequence[int]) -> List[HpResult]:
    if config.mode == 'trajectories':
        return trajectory_time_series(layout, step, n_steps, dt, _noise_spec(config), record=record,
                                      progress=config.output.progress)
    if config.mode == 'channel':
        return channel_time_series(layout, step, n_steps, dt, _noise_spec(config), record=record)
    return ideal_time_series(layout, step, n_steps, dt, record=record)


def _protocol_rows(config: ExperimentConfig, layout: ProtocolLayout) -> List[Dict]:
    """Rows of the ideal, trajectory or channel time series over the grid."""
    grid = config.time_grid()
    results: List[Tuple[Tuple[float, int, float], HpResult]] = []
    if config.trotter.M is None:
        dt = config.dt
        n_steps = max(M for _, M, _ in grid)
        series = _series(config, layout, step_evolution(config, dt), n_steps, dt, [M for _, M, _ in grid])
        by_step = dict(zip(sorted({M for _, M, _ in grid}), series))
        results = [(point, by_step[point[1]]) for point in grid]
    else:
        propagator = SpectralPropagator(model_hamiltonian(config)) if config.model.evolution == 'exact' else None
        for point in grid:
            t, M, dt = point
            step = step_evolution(config, dt if M else 0.0, propagator)
            results.append((point, _series(config, layout, step, M, dt, [M])[-1]))
    rows = []
    for (t, M, dt), result in results:
        row = _base_row(config, layout, t, M, dt)
        data = result.to_dict()
        data.pop('t')
        row.update(data)
        if config.model.name == 'ym':
            row['Kt'] = config.model.K * t
        if config.sampling.entropies:
            row.update(asdict(scrambling_entropies(layout, evolution_at(config, M, dt))))
        rows.append(row)
    return rows


def _haar_rows(config: ExperimentConfig, layout: ProtocolLayout) -> List[Dict]:
    n = config.sampling.haar_samples
    p, f = run_haar_samples(layout, n, config.rng(), progress=config.output.progress)
    baselines = haar_baselines(layout.d_A, layout.d_B, layout.d_C, layout.d_D)
    row = _base_row(config, layout, 0.0, 0, 0.0)
    row.update({
        'n_traj': n, 'p_epr': float(p.mean()), 'p_err': float(p.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
        'f_epr': float(f.mean()), 'f_err': float(f.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
        'p_haar': baselines.p_haar_exact, 'f_haar': baselines.f_haar_exact,
    })
    return [row]


def _teleport_rows(config: ExperimentConfig, layout: ProtocolLayout) -> List[Dict]:
    """Haar-psi averages of p*f compared with (P_EPR + 1/d_A)/(d_A + 1)."""
    rows = []
    psi_stream = config.rng().child(3)
    n = config.sampling.psi_samples
    for t, M, dt in config.time_grid():
        u = evolution_at(config, M, dt)
        ideal = run_hp_ideal(layout, u, t)
        pf = np.empty(n)
        for s in range(n):
            p_psi, f_psi = run_state_teleportation(layout, u, haar_random_state(layout.N_A, psi_stream.child(s)))
            pf[s] = p_psi * f_psi
        row = _base_row(config, layout, t, M, dt)
        row.update({
            'n_traj': n, 'p_epr': ideal.p_epr, 'p_err': 0.0, 'f_epr': ideal.f_epr, 'f_err': 0.0,
            'pf_mean': float(pf.mean()), 'pf_err': float(pf.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
            'pf_predicted': (ideal.p_epr + 1.0 / layout.d_A) / (layout.d_A + 1),
        })
        rows.append(row)
    return rows


def _otoc_rows(config: ExperimentConfig, layout: ProtocolLayout) -> List[Dict]:
    rows = []
    otoc_stream = config.rng().child(4)
    for index, (t, M, dt) in enumerate(config.time_grid()):
        u = evolution_at(config, M, dt)
        ideal = run_hp_ideal(layout, u, t)
        otoc, otoc_err = averaged_otoc_mc(layout, u, config.sampling.otoc_samples, otoc_stream.child(index))
        row = _base_row(config, layout, t, M, dt)
        row.update({'n_traj': config.sampling.otoc_samples, 'p_epr': ideal.p_epr, 'p_err': 0.0,
                    'f_epr': ideal.f_epr, 'f_err': 0.0, 'otoc': otoc, 'otoc_err': otoc_err})
        rows.append(row)
    return rows


EXTRA_COLUMNS = [
    'Kt', 'flags', 'p_haar', 'f_haar', 'pf_mean', 'pf_err', 'pf_predicted', 'otoc', 'otoc_err',
    'i2_r_bd', 'i_r_bd', 'i_r_c', 'i_r_d', 'i3_rcd', 'i2_r_c', 'i2_r_d',
]


def _check(config: ExperimentConfig) -> None:
    errors = config.validate()
    if errors:
        for error in errors:
            logger.error(f"Invalid config: {error}")
        raise errors[0]


def compute_rows(config: ExperimentConfig) -> List[Dict]:
    """Evaluate every grid point of ``config`` without writing anything.

    Raises:
        ConfigError: on the first invalid field
    """
    _check(config)
    layout = config.make_layout()
    logger.info(f"Running {config.mode} {config.model.name} experiment: N={layout.N}, "
                f"A={layout.a_sites}, D={layout.d_sites}")
    if config.model.name == 'haar':
        return _haar_rows(config, layout)
    if config.mode == 'teleport':
        return _teleport_rows(config, layout)
    if config.mode == 'otoc':
        return _otoc_rows(config, layout)
    return _protocol_rows(config, layout)


def write_dumps(config: ExperimentConfig) -> None:
    """Write the step circuit and the Hamiltonian text dumps when requested."""
    if config.model.name == 'haar':
        return
    if config.output.dump_circuit:
        write_text(circuit_to_text(step_circuit(config, config.dt)), config.output.dump_circuit)
    if config.output.dump_hamiltonian:
        write_text(model_hamiltonian(config).to_text(), config.output.dump_hamiltonian)


def write_outputs(config: ExperimentConfig, rows: List[Dict], extra_columns: Optional[List[str]] = None) -> None:
    if config.output.csv:
        save_results_csv(rows, config.output.csv, extra_columns or EXTRA_COLUMNS)
    if config.output.json:
        save_results_json({'config': config.to_dict(), 'rows': rows}, config.output.json)


def run_experiment(config: ExperimentConfig) -> List[Dict]:
    """Run one experiment and write its result files.

    Returns:
        Result rows in grid order (one per time point; one in total for haar)
    """
    rows = compute_rows(config)
    write_dumps(config)
    write_outputs(config, rows)
    logger.info(f"Experiment finished: {len(rows)} rows")
    return rows


# -- sweeps ------------------------------------------------------------------

def sweep_point(config: ExperimentConfig, axis: str, value: Union[int, float]) -> ExperimentConfig:
    """Copy of ``config`` with the sweep axis set to ``value``."""
    point = config.copy()
    if axis == 't':
        point.trotter.t_values = [float(value)]
    elif axis == 'K':
        point.model.K = float(value)
    elif axis == 'p':
        point.noise.p = float(value)
    elif axis == 'N':
        point.layout.N = int(value)
    elif axis == 'M':
        point.trotter.M = int(value)
    else:
        raise ValueError(f"Unknown sweep axis: {axis}")
    return point


def _run_grid_point(args: Tuple[int, ExperimentConfig]) -> Tuple[int, List[Dict]]:
    index, config = args
    return index, compute_rows(config)


def aggregate_sweep(rows: pd.DataFrame, window: Optional[Sequence[float]] = None,
                    window_in_kt: bool = False) -> pd.DataFrame:
    """Late-time value per grid point: the final time and the window average."""
    time_col = 'Kt' if window_in_kt else 't'
    records = []
    for (index, value), group in rows.groupby(['grid_index', 'sweep_value'], sort=True):
        group = group.sort_values('t')
        final = group.iloc[-1]
        record = {'grid_index': index, 'sweep_axis': final['sweep_axis'], 'sweep_value': value,
                  't_final': final['t'], 'p_final': final['p_epr'], 'f_final': final['f_epr']}
        if window is not None:
            inside = group[(group[time_col] >= window[0] - 1e-12) & (group[time_col] <= window[1] + 1e-12)]
            record.update({'window_lo': window[0], 'window_hi': window[1], 'n_window': len(inside),
                           'p_window': inside['p_epr'].mean(), 'f_window': inside['f_epr'].mean()})
        records.append(record)
    return pd.DataFrame(records)


def run_sweep(config: ExperimentConfig, axis: Optional[str] = None,
              values: Optional[Sequence[float]] = None, workers: int = 1) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Run the cross product of ``config`` with the axis values.

    Grid points may run in a process pool; rows are reordered by grid index
    before writing, so the files do not depend on scheduling.

    Returns:
        (all rows, aggregated late-time table)
    """
    axis = axis or config.sweep.axis
    values = list(values if values is not None else config.sweep.values)
    if axis not in SWEEP_AXES:
        raise ConfigError('sweep.axis', f"must be one of {SWEEP_AXES}, got {axis!r}")
    if not values:
        raise ConfigError('sweep.values', "must not be empty")
    points = [(i, sweep_point(config, axis, v)) for i, v in enumerate(values)]
    for _, point in points:
        _check(point)
    logger.info(f"Sweeping {axis} over {values} ({len(points)} grid points, {workers} worker(s))")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            outputs = list(executor.map(_run_grid_point, points))
    else:
        outputs = [_run_grid_point(p) for p in tqdm(points, disable=not config.output.progress, desc='sweep')]
    rows = []
    for index, point_rows in sorted(outputs, key=lambda item: item[0]):
        for row in point_rows:
            row.update({'sweep_axis': axis, 'sweep_value': values[index], 'grid_index': index})
            rows.append(row)
    columns = EXTRA_COLUMNS + ['sweep_axis', 'sweep_value', 'grid_index']
    if config.output.csv:
        save_results_csv(rows, config.output.csv, columns)
    frame = pd.DataFrame(rows)
    window_in_kt = config.sweep.window_in_kt
    if window_in_kt and 'Kt' not in frame.columns:
        raise ConfigError('sweep.window_in_kt', "K*t windows need the ym model")
    summary = aggregate_sweep(frame, config.sweep.window, window_in_kt)
    if config.output.csv:
        summary_path = sibling_path(config.output.csv, '_summary.csv')
        summary_path = resolve_output_path(summary_path)
        summary.to_csv(summary_path, index=False, float_format='%.12g')
        logger.info(f"Sweep summary saved to: {summary_path}")
    if config.output.json:
        save_results_json({'config': config.to_dict(), 'axis': axis, 'values': values,
                           'rows': rows, 'summary': summary.to_dict(orient='records')}, config.output.json)
    return frame, summary


# -- gauge artifacts ---------------------------------------------------------

def build_ym_artifacts(N: int, K: float, prefix: Optional[str] = None) -> Dict[str, float]:
    """Enumerate the gauge basis, build both Hamiltonians and compare them.

    Writes ``<prefix>_basis.txt``, ``_electric.txt``, ``_magnetic.txt`` and
    ``_pauli.txt`` when ``prefix`` is given.

    Returns:
        Summary with basis size, term count and the max abs difference
    """
    basis, h_constructive = constructive_hamiltonian(N, K)
    closed = ym_ising_closed_form(N, K)
    diff = float(np.max(np.abs(closed.to_dense() - dual_basis_hamiltonian(N, K))))
    logger.info(f"Gauge basis for N={N}: {len(basis)} states, closed form has {len(closed)} terms, "
                f"max |difference| = {diff:.3e}")
    if prefix:
        listing = ''.join(f"{k} {state.describe()} {dual_spin_map(state)}\n" for k, state in enumerate(basis))
        write_text(listing, f"{prefix}_basis.txt")
        write_text(electric_matrix(basis).to_text(), f"{prefix}_electric.txt")
        write_text(magnetic_matrix(basis, K).to_text(), f"{prefix}_magnetic.txt")
        write_text(closed.to_text(), f"{prefix}_pauli.txt")
    return {'N': N, 'K': K, 'basis_size': len(basis), 'n_terms': len(closed),
            'constructive_nnz': len(h_constructive.entries), 'max_abs_diff': diff}
