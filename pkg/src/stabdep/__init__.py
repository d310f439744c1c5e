"""Stabiliser-state enumeration, the sparse dependency basis and stabiliser extent.

Bitstrings put qubit 1 leftmost and as the most significant bit of an index.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .basis import TripleBasis, build_basis, canonical_dependency, split, triangular_solve
from .enumeration import StateOrdering, enumerate_lagrangians, lagrangian_count, state_count
from .extent import SolverParams, extent, extent_dictionary, minimize_l1_affine
from .pauli import PhasedPauli
from .stabiliser import CheckMatrix, amplitudes, support

__all__ = [
    "CheckMatrix",
    "PhasedPauli",
    "SolverParams",
    "StateOrdering",
    "TripleBasis",
    "amplitudes",
    "build_basis",
    "canonical_dependency",
    "enumerate_lagrangians",
    "extent",
    "extent_dictionary",
    "lagrangian_count",
    "minimize_l1_affine",
    "split",
    "state_count",
    "support",
    "triangular_solve",
]
