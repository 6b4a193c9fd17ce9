"""Correlation-space simulation toolkit.

Matrix-product chains and small weighted-graph lattices read as gate networks:
measurement patterns steer the correlation space, finite by-product groups
track outcome randomness, and dense statevector oracles keep everything
honest.
"""

from __future__ import annotations

from .bases import BasisSpec, aklt_phase_basis, phase_basis, x_basis, y_basis, z_basis
from .compile import (
    CompiledPattern,
    ExecutionResult,
    compile_single_qubit,
    euler_two_axis,
    euler_zxz,
    execute_compiled,
    zxz_matrix,
)
from .czgate import (
    WgsFrontierSim,
    branch_probability_scan,
    byproduct_factors,
    enumerate_branches,
    logical_cz,
)
from .groups import (
    GroupClosureError,
    ProjectiveElement,
    ProjectiveGroup,
    closure,
    compensation_walk,
    normal_form_word,
)
from .mps import MpsChain, CorrelationState, amplitude, to_statevector, two_point_correlation
from .protocols import (
    MeasurementPattern,
    MeasurementStep,
    ProtocolRecord,
    phase_gate_step,
    reduce_line,
    run_pattern,
    transport_op,
)
from .resources import (
    EncodedResourceSpec,
    aklt_type_chain,
    build_resource,
    cluster_state,
    correlation_chain,
    encoded_resource,
    parse_resource_spec,
    weighted_graph_state,
    wgs_network_state,
)
from .statevec import PureState, measure_site
from .tensor import LabeledTensor, contract, named_gate, proportional_up_to_phase

__version__ = "0.1.0"

__all__ = [
    "BasisSpec",
    "CompiledPattern",
    "CorrelationState",
    "EncodedResourceSpec",
    "ExecutionResult",
    "GroupClosureError",
    "LabeledTensor",
    "MeasurementPattern",
    "MeasurementStep",
    "MpsChain",
    "ProjectiveElement",
    "ProjectiveGroup",
    "ProtocolRecord",
    "PureState",
    "WgsFrontierSim",
    "aklt_phase_basis",
    "aklt_type_chain",
    "amplitude",
    "branch_probability_scan",
    "build_resource",
    "byproduct_factors",
    "closure",
    "cluster_state",
    "compensation_walk",
    "compile_single_qubit",
    "contract",
    "correlation_chain",
    "encoded_resource",
    "enumerate_branches",
    "euler_two_axis",
    "euler_zxz",
    "execute_compiled",
    "logical_cz",
    "measure_site",
    "named_gate",
    "normal_form_word",
    "parse_resource_spec",
    "phase_basis",
    "phase_gate_step",
    "proportional_up_to_phase",
    "reduce_line",
    "run_pattern",
    "to_statevector",
    "transport_op",
    "two_point_correlation",
    "weighted_graph_state",
    "wgs_network_state",
    "x_basis",
    "y_basis",
    "z_basis",
    "zxz_matrix",
    "__version__",
]
