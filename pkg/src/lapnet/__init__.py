"""Weighted graph Laplacians on finite graphs and on windows of infinite ones.

Dipole potentials, resistance metrics, Kirchhoff checks, spectra, heat
semigroups with truncation bounds, and defect probes for banded operators.
Set ``LAPNET_DISABLE_JIT=1`` to run the pure NumPy kernels instead of numba.
"""

from ._kernels import backend
from .graph import (
    GraphFormatError,
    GraphSystem,
    ValidationReport,
    Window,
    WeightRule,
    build_chain,
    build_cyclic,
    build_lattice,
    dump_graph,
    from_edges,
    integer_line,
    load_graph,
    parse_graph,
    save_graph,
    validate,
)
from .heisenberg import (
    HalfLineBandedOperator,
    banded_add,
    banded_multiply,
    build_hamiltonian,
    build_P,
    build_Q,
    build_QPQ,
    deficiency_probe_banded,
)
from .operator import (
    BandedMatrix,
    VertexField,
    apply_adjoint,
    apply_full,
    apply_laplacian,
    assemble_matrix,
    energy,
    energy_bilinear,
    row_sum_check,
    weighted_degree,
)
from .potential import (
    ConsistencyError,
    ConvergenceError,
    CurrentFunction,
    NoSolutionError,
    PotentialSolution,
    ResistanceMetric,
    currents_from_potential,
    dissipation,
    path_resistance_bound,
    potential_from_currents,
    reference_dipole,
    resistance_distance,
    solve_dipole,
    verify_kirchhoff,
)
from .semigroup import (
    BoundaryCoupling,
    boundary_coupling,
    heat_apply,
    truncation_difference,
    truncation_error_check,
)
from .spectral import (
    DefectReport,
    SpectralDecomposition,
    apply_spectral_function,
    cyclic_spectrum,
    defect_probe,
    hs_membership_line,
    hs_norm,
    lattice_symbol,
    truncated_spectrum,
)

__version__ = "0.1.0"
