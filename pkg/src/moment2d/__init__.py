"""Truncated two-dimensional moment problem.

Extended (resolvent-type) moments, their solvability checks, a finite GNS
construction with commuting multiplication operators, recovery of atomic
representing measures, and extension of classical moments to extended ones.
"""
from .extension import (
    ExtendOptions,
    ExtensionError,
    InsufficientDegreeError,
    Step0Rejected,
    bound_M,
    enumerate_solution_family,
    extend_truncated,
    step0,
)
from .gns import (
    FlatnessWarning,
    GnsSpace,
    NotAMomentKernelError,
    OperatorPair,
    build_operators,
    build_space,
    cayley,
    check_cayley_unitarity,
    check_commutation,
    reconstruct_vector,
)
from .lattice import ExtendedIndex, Window, enumerate_basis, indexation, pair_index, rank
from .moments import (
    AtomicMeasure,
    CheckReport,
    ClassicalMoments,
    ExtendedMoments,
    MissingMomentError,
    check_all,
    check_anchoring,
    check_positivity,
    check_recurrences,
    check_symmetry,
    gram_matrix,
    oracle_classical,
    oracle_extended,
)
from .pipeline import Recovery, RecoveryError, recover
from .spectral import MergeWarning, joint_diagonalize, recover_measure, verify_measure
from .torus import TorusMeasure, cayley_point_map, compare_measures, pushforward, trig_moment

__all__ = [name for name in dir() if not name.startswith("_")]
