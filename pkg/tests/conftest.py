"""Shared fixtures for the HaydenPreskillScrambling test suite."""
import numpy as np
import pytest

from HaydenPreskillScrambling.modules.circuits import Circuit
from HaydenPreskillScrambling.modules.engine import Gate, RngStream, haar_random_state
from HaydenPreskillScrambling.modules.experiment_manager import ExperimentConfig
from HaydenPreskillScrambling.modules.protocol import make_layout


def random_circuit(n_qubits: int, n_gates: int, seed: int) -> Circuit:
    """Random gate list over {H, RZ, CNOT}."""
    gen = np.random.default_rng(seed)
    gates = []
    for _ in range(n_gates):
        kind = gen.integers(3)
        if kind == 0:
            gates.append(Gate.h(int(gen.integers(n_qubits))))
        elif kind == 1:
            gates.append(Gate.rz(int(gen.integers(n_qubits)), float(gen.uniform(-np.pi, np.pi))))
        else:
            control, target = gen.choice(n_qubits, size=2, replace=False)
            gates.append(Gate.cnot(int(control), int(target)))
    return Circuit(n_qubits, gates, 'random')


@pytest.fixture
def rng_stream():
    """Factory of reproducible streams: rng_stream(seed) -> RngStream."""
    def make(seed: int = 1234) -> RngStream:
        return RngStream(seed)
    return make


@pytest.fixture
def random_state():
    """Factory of Haar-random pure states: random_state(n_qubits, seed)."""
    def make(n_qubits: int, seed: int = 0):
        return haar_random_state(n_qubits, RngStream(seed))
    return make


@pytest.fixture
def small_layout():
    """N=4, N_A=1, N_D=1 with A on site 0 and D on site 3 (10 protocol qubits)."""
    return make_layout(4, 1, 1)


@pytest.fixture
def tiny_layout():
    """N=3, N_A=1, N_D=1 (8 protocol qubits)."""
    return make_layout(3, 1, 1)


@pytest.fixture
def small_config(tmp_path):
    """Chaotic Ising config on 4 sites writing into tmp_path."""
    config = ExperimentConfig()
    config.layout.N = 4
    config.layout.N_D = 1
    config.trotter.t_max = 0.5
    config.noise.n_traj = 20
    config.noise.n_bootstrap = 20
    config.output.csv = str(tmp_path / 'results.csv')
    return config
