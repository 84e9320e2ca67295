from .identity import verify_identity_lower
from .lemmas import (PreconditionError, verify_alternation, verify_gap_monotone,
                     verify_pair_conservation, verify_pair_growth, verify_pair_length, verify_split_phase,
                     verify_state_identities, verify_sync_phase, verify_upper_bound, verify_wpsi)
from .report import BoundReport, Check
from .segment import Phase, Segmentation, SyncSplitPair, find_phases, segment_phases
from .suite import verify_all, verify_many
from .sums import SumCheck, sum_inequality_oracle
from .weights import WeightVector, gap_vectors, weight_from_gaps, weight_vector

__all__ = [
    "BoundReport", "Check", "Phase", "PreconditionError", "Segmentation", "SumCheck",
    "SyncSplitPair", "WeightVector", "find_phases", "gap_vectors", "segment_phases",
    "sum_inequality_oracle", "verify_all", "verify_alternation", "verify_gap_monotone",
    "verify_identity_lower", "verify_many", "verify_pair_conservation", "verify_pair_growth", "verify_pair_length",
    "verify_split_phase", "verify_state_identities", "verify_sync_phase", "verify_upper_bound",
    "verify_wpsi", "weight_from_gaps", "weight_vector",
]
