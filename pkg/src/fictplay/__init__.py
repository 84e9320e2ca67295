"""Fictitious Play for zero-sum matrix games, with lexicographic tie-breaking,
exact arithmetic and trace-level checks of its convergence bounds."""
from ._backend import BACKEND
from .dynamics import (DynamicKind, EngineState, RoundRecord, SnapshotPolicy, TieBreakRule, Trace,
                       best_response_max, best_response_min, run, step_afp, step_fp, step_ofp)
from .game import (DimensionError, PayoffMatrix, SimplexPoint, UnsupportedStructureError,
                   duality_gap, duality_gap_from_state, minimax_diagonal, support_form_gap)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "DimensionError", "DynamicKind", "EngineState", "PayoffMatrix", "RoundRecord",
    "SimplexPoint", "SnapshotPolicy", "TieBreakRule", "Trace", "UnsupportedStructureError",
    "best_response_max", "best_response_min", "duality_gap", "duality_gap_from_state",
    "minimax_diagonal", "run", "step_afp", "step_fp", "step_ofp", "support_form_gap",
]
