"""Permutation-symmetric Lindblad master equations for N identical multi-level systems.

The density matrix of N identical systems coupled to bosonic modes is stored
in the basis of symmetrized operator products, which grows polynomially in N.
"""

from .basis import (
    GROUND,
    MLSDim,
    Mode,
    MultiIndex,
    SpecError,
    SymBasis,
    SystemSpec,
    define_system,
    dimension_count,
    enumerate_basis,
    is_density_element,
)
from .dynamics import (
    DualVector,
    G2Zero,
    NonPhysicalStateWarning,
    distribution,
    hermiticity_defect,
    init_state,
    make_observable,
    mls_occupation,
    mode_occupation,
    pure_state,
    thermal_state,
    trace_functional,
)
from .integrate import IntegrationError, SolverConfig, SolverStats, evolve
from .operators import AssemblyError, SparseOperator, combine, identity
from .pruning import PruneResult, prune_reachable
from .steady import SteadyStateError, SteadyStats, steady_state
from .templates import add_template, assemble

__version__ = "0.1.0"

__all__ = [
    "GROUND",
    "MLSDim",
    "Mode",
    "MultiIndex",
    "SpecError",
    "SymBasis",
    "SystemSpec",
    "define_system",
    "dimension_count",
    "enumerate_basis",
    "is_density_element",
    "DualVector",
    "G2Zero",
    "NonPhysicalStateWarning",
    "distribution",
    "hermiticity_defect",
    "init_state",
    "make_observable",
    "mls_occupation",
    "mode_occupation",
    "pure_state",
    "thermal_state",
    "trace_functional",
    "IntegrationError",
    "SolverConfig",
    "SolverStats",
    "evolve",
    "AssemblyError",
    "SparseOperator",
    "combine",
    "identity",
    "PruneResult",
    "prune_reachable",
    "SteadyStateError",
    "SteadyStats",
    "steady_state",
    "add_template",
    "assemble",
]
