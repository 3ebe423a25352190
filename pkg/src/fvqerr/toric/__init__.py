"""Kitaev toric code on an N x M torus with one qubit per edge."""

from .code import (LOGICAL_LABELS, CodeBasis, Sector, SparseState, all_sectors, codeword,
                   codeword_basis, fv_kitaev_estimate, q_coherent_transform, q_matrix,
                   q_matrix_element, q_model_matrix, q_model_matrix_element,
                   selection_rule_edges)
from .lattice import TorusLattice, build_logicals, build_stabilizers, stabilizer_group_rank
from .pauli import PauliString
from .recovery import (KLResult, RecoveryReport, SyndromeRecord, fidelity, knill_laflamme_check,
                       lattice_from_json, lattice_to_json, measure_syndrome, recovery_map,
                       recovery_sweep, single_qubit_errors, write_q_table)

__all__ = [
    "CodeBasis",
    "KLResult",
    "LOGICAL_LABELS",
    "PauliString",
    "RecoveryReport",
    "Sector",
    "SparseState",
    "SyndromeRecord",
    "TorusLattice",
    "all_sectors",
    "build_logicals",
    "build_stabilizers",
    "codeword",
    "codeword_basis",
    "fidelity",
    "fv_kitaev_estimate",
    "knill_laflamme_check",
    "lattice_from_json",
    "lattice_to_json",
    "measure_syndrome",
    "q_coherent_transform",
    "q_matrix",
    "q_matrix_element",
    "q_model_matrix",
    "q_model_matrix_element",
    "recovery_map",
    "recovery_sweep",
    "selection_rule_edges",
    "single_qubit_errors",
    "stabilizer_group_rank",
    "write_q_table",
]
