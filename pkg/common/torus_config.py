from fractions import Fraction

# Binary field dump format
FIELD_MAGIC = b"CIB2"
FIELD_VERSION = 1
CHECKSUM_BYTES = 32

# Grid requirements
MIN_GRID_MODES = 8
RESOLUTION_FACTOR = 4  # N >= 4 * highest active wavenumber for products

# Tolerances used by solvers and structural checks
ROUND_TRIP_TOL = 1e-13
ACTIVE_MODE_TOL = 1e-15
DIVERGENCE_TOL = 1e-10
CFL_LIMIT = 0.25
ADVECTIVE_CFL = 1.0  # h * sup|v| * (N/3) for the pseudo-spectral advection step

# Every phase is e^{i lambda k.x} with k in fifths, so lambda must be a multiple of this.
PHASE_DENOMINATOR = 5

# Direction family Lambda_0^+ = {e1, (3/5, 4/5), (3/5, -4/5)}; Lambda_1^+ is its pi/2 rotation.
LAMBDA0_PLUS = (
    (Fraction(1), Fraction(0)),
    (Fraction(3, 5), Fraction(4, 5)),
    (Fraction(3, 5), Fraction(-4, 5)),
)

# Parameters of the scheme that are fixed once and for all
BETA = 1 / 8

# Time partition bump: supported in (-3/4, 3/4), identically 1 on [-1/4, 1/4]
PARTITION_SUPPORT = 0.75
PARTITION_PLATEAU = 0.25

# Default run presets (see cli.config)
PRESETS = {
    "desk": {
        "a": 4.0,
        "gamma": 0.4,
        "lambda0": 5,
        "lambda_growth": 10,
        "N": 512,
        "n_t": 257,
    },
    "tiny": {
        "a": 4.0,
        "gamma": 0.4,
        "lambda0": 1,
        "lambda_growth": 10,
        "N": 64,
        "n_t": 33,
    },
}

DEFAULT_ENERGY_COEFFS = (1.0, 0.001)

# Verification
RESIDUAL_TOL = 5e-6  # sup of the Boussinesq-Reynolds residual of a stage state
THETA_IDENTITY_TOL = 1e-5  # relative to ‖θ⁰‖²_{L²}
THETA_MEAN_TOL = 1e-12
ESTIMATE_RTOL = 1e-9
HOLDER_ALPHAS = (0.0, 0.05, 0.09)
HOLDER_TIME_SLICES = 9
