from .arith import (add_constant_gates, comparator, comparator_gates, cyclic_shift_gates, decrement_gates,
                    increment_gates, permutation_gates, shift_operator, transposition_gates)
from .block_encoding import (assemble_block_encoding, encoded_basis_indices, position_oracle, relaxation_layout,
                             value_oracle)
from .core import Circuit, Gate, Register, RegisterLayout, range_controls, value_controls
from .report import GateCountReport, gate_report, lower_zero_controls, two_qubit_cost
from .streaming import streaming_circuit

__all__ = [
    "add_constant_gates", "comparator", "comparator_gates", "cyclic_shift_gates", "decrement_gates",
    "increment_gates", "permutation_gates", "shift_operator", "transposition_gates",
    "assemble_block_encoding", "encoded_basis_indices", "position_oracle", "relaxation_layout", "value_oracle",
    "Circuit", "Gate", "Register", "RegisterLayout", "range_controls", "value_controls",
    "GateCountReport", "gate_report", "lower_zero_controls", "two_qubit_cost", "streaming_circuit",
]
