"""Sparse signal recovery from phase-only complex Gaussian measurements.

The package observes ``sign(Phi x)`` through optional noise channels,
linearizes the observations into a real system ``A_z u = e1`` and recovers
``x`` by (weighted) l1 minimization.
"""

__version__ = "0.1.0"

from .measurement import (  # noqa: E402
    Combined,
    InfeasibleConstruction,
    ObservedPhases,
    PostSignDense,
    PreSignDense,
    SensingMatrix,
    SparseCorruption,
    apply_channel,
    construct_indistinguishable_pair,
    draw_sensing_matrix,
    draw_sparse_signal,
    observe,
    phase,
)
from .linearization import (  # noqa: E402
    KAPPA,
    build_extended,
    build_linearized,
    ground_truth_extended,
    ground_truth_scaled,
    residual,
    sparsity_defect,
)
from .solver import SolverOptions, lp_oracle, qcbp, weighted_bp_equality  # noqa: E402
from .recovery import epsilon_for, powerlaw_signal, recover, recover_extended  # noqa: E402
