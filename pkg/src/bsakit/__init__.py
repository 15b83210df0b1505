"""Two-qubit entanglement toolkit: concurrence, PPT test, optimal
Lewenstein-Sanpera decompositions of Bell-diagonal states, their transport
under local filtering, and a brute-force cross-check."""

from .entanglement import (
    ConcurrenceReport,
    SeparabilityVerdict,
    concurrence,
    concurrence_bd,
    entanglement_of_formation,
    is_separable,
    pure_concurrence,
)
from .errors import BsakitError
from .lqcc import (
    Filtration,
    LqccMap,
    apply_lqcc,
    concurrence_transform_check,
    filtration_matrix,
    random_map,
    transport_decomposition,
    verify_transported_optimality,
)
from .lsd import (
    LsDecomposition,
    OptimalityCertificate,
    build_product_ensemble,
    build_x_vectors,
    ls_decompose_bd,
    maximal_pair_weights,
    verify_optimality,
    wronskian_checks,
)
from .oracle import OracleResult, bsa_search, feasibility
from .states import (
    BellDiagonal,
    DensityMatrix,
    PureState,
    bd_to_density,
    bell_basis,
    density_to_bd,
    random_bd,
    spin_flip,
)
from .tolerances import DEFAULT, Tolerances

__version__ = "0.1.0"
