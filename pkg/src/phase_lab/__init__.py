"""Geometric-phase, no-cloning and consistent-histories toolkit."""

from .cloning import (
    CloningFeasibilityReport,
    CloningSpec,
    ConstraintKind,
    Verdict,
    clonability_check,
    cp_history_check,
    history_cloning_check,
    multi_time_cloning_check,
)
from .errors import (
    ConfigError,
    GridTooCoarse,
    InvalidInput,
    NotCyclic,
    OrthogonalStates,
    PhaseLabError,
)
from .evolution import HamiltonianSpec, TimeGrid, Trajectory, evolve, evolve_parallel, is_cyclic, propagator
from .histories import (
    HistoryFamily,
    HistoryProposition,
    check_axioms,
    consistency_check,
    decoherence_functional,
    fine_grained_trace,
    history_geometric_phase,
    weight_operator,
)
from .phases import (
    BargmannInvariant,
    PhaseDecomposition,
    bargmann_invariant,
    decompose,
    dynamical_phase,
    excess_geometric_phase,
    geometric_phase_cyclic,
    geometric_phase_open,
    pancharatnam_phase,
)
from .state_space import StateVector, inner, projector, ray_operator, same_ray, wrap_phase
from .transport import TransportReport, parallel_transport, transport_defect, universal_transport_residual

__version__ = "0.1.0"
