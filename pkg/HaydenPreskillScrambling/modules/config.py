"""Configuration settings for HaydenPreskillScrambling."""
import os

# Directory paths
SCRIPT_DIR = os.path.dirname(os.path.abspath(__file__))
PARENT_DIR = os.path.dirname(SCRIPT_DIR)
ROOT_DIR = os.path.dirname(PARENT_DIR)
OUTPUTS_DIR = os.path.join(ROOT_DIR, 'outputs')

# Numerical tolerances
NORM_TOL = 1e-10
HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
PROJECTION_THRESHOLD = 1e-14

# Dense feasibility bounds (qubits)
MAX_EXACT_QUBITS = 12
MAX_REDUCED_QUBITS = 14
MAX_DENSITY_QUBITS = 12

# Default settings
DEFAULT_SEED = 20240601
DEFAULT_DT_ISING = 0.1
DEFAULT_DT_YM = 0.5
DEFAULT_BOOTSTRAP = 200
DEFAULT_HAAR_SAMPLES = 200
DEFAULT_PSI_SAMPLES = 500
DEFAULT_OTOC_SAMPLES = 2000
DEFAULT_N_TRAJ = 1000
DEFAULT_SCOPE = 'all_cnots'
NOISE_SCOPES = ('all_cnots', 'evolution_only', 'whole_unitary')
MODELS = ('ising', 'ym', 'haar')
PLACEMENTS = ('ising_default', 'ym_default', 'explicit')
SWEEP_AXES = ('t', 'K', 'p', 'N', 'M')

# Ising parameter sets (h, m)
ISING_PARAMETER_SETS = {
    'classical': (0.0, 0.0),
    'critical': (1.0, 0.0),
    'chaotic': (-1.05, 0.5),
}
YM_COUPLINGS = (0.0, 0.5, 2.0)

# Result file schema
RESULT_COLUMNS = [
    'model', 'N', 'N_A', 'N_D', 'placement', 't', 'dt', 'M', 'K', 'h', 'm',
    'p', 'scope', 'n_traj', 'p_epr', 'p_err', 'f_epr', 'f_err', 'seed',
]
DIAGNOSTIC_COLUMNS = [
    's2_r', 's2_b_d', 's2_r_b_d', 'i2', 'delta', 'purity_b_d', 'purity_r_b_d',
]
DEFAULT_RESULTS_CSV = os.path.join(OUTPUTS_DIR, 'results.csv')
