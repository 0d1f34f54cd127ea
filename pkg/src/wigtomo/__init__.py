"""wigtomo: scanning Wigner tomography of unknown unitary gates, simulated.

The package maps scaled copies of an unknown single-qubit gate onto ancilla
density matrices with a controlled-swap circuit, samples their spherical
droplet functions on Lebedev grids, and reconstructs the gate from the
droplets via a correlation-matrix estimate, matched-filter iteration, and
cost minimization, sweeping shot noise and calibration errors along the way.
"""

__version__ = "0.1.0"

from . import bench, circuit_sim, droplet, reconstruct, spin_ops, tomography  # noqa: F401
from .droplet import (  # noqa: F401
    Droplet,
    SphereGrid,
    combine,
    correlation_matrix,
    droplet_to_operator,
    fidelity,
    lebedev_grid,
    operator_to_droplet,
    phase_adjust,
    scalar_product,
    spherical_harmonic,
)
from .errors import (  # noqa: F401
    CalibrationError,
    ConfigError,
    DegenerateInputError,
    DomainError,
    GridMismatchError,
    UnsupportedError,
    WigtomoError,
)
from .reconstruct import (  # noqa: F401
    CostParams,
    ReconstructionReport,
    adaptive_reconstruct,
    generalized_cost,
    iterate_reconstruction,
    optimize_cost,
    zero_order_estimate,
)
from .spin_ops import (  # noqa: F401
    Quaternion,
    named_gate,
    pauli_coefficients,
    quaternion_to_unitary,
    rotation_operator,
    scaling_factor,
    unitary_to_quaternion,
)
from .tomography import (  # noqa: F401
    CalibrationResult,
    NoiseModel,
    ScanConfig,
    apply_correction,
    apply_noise,
    calibrate,
    scan,
)
