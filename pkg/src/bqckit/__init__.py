"""Simulation and training toolkit for parameterized quantum circuits.

Subpackages map onto the pipeline: dense statevector core, named-gate
library with verified identities, circuit IR and family builders, the
block-schedule compiler for diagonal-layer circuits, an MPS execution
bridge with entanglement accounting, MMD/NLL losses with shift-rule
gradients, and the two reference generative experiments.
"""

__version__ = "0.1.0"

from .statevector import (  # noqa: F401
    EXACT_SHOTS,
    MAX_QUBITS,
    MeasurementRecord,
    StateVector,
    apply_gate,
    fidelity_up_to_phase,
    new_zero_state,
    probabilities,
    sample,
)
from .gates import (  # noqa: F401
    AbcDecomposition,
    NamedGate,
    abc_decompose,
    gate_matrix,
    toffoli_network,
    verify_cz_identity,
    verify_h_identity,
)
from .circuit import (  # noqa: F401
    CircuitIR,
    Op,
    from_json,
    simulate,
    to_json,
    toffoli_circuit,
)
from .builders import (  # noqa: F401
    BqcSpec,
    MpqcSpec,
    TpqcSpec,
    build_bqc,
    build_mpqc,
    build_toy_thm3,
    build_tpqc,
    joint_distribution,
)
