"""Small monochromatic tilings of edge-coloured complete graphs by bounded-degree bipartite sequences."""

from .bitset import VertexSet
from .drc import DrcParams, DrcResult, chernoff_lower_tail, dependent_random_choice, k_set_drc, pair_drc
from .errors import (BudgetExhausted, ChainExhausted, CopyNotFound, InfeasibleAtScale, MonotileError,
                     PreconditionError, RetriesExhausted, StageError, UnsatisfiableFamily)
from .graph import ColouredCompleteGraph, generate, load, save
from .hypergraph import embed_carefully, embed_hypergraph, is_rich
from .absorption import absorb, find_good_subgraph, verify_good
from .oracle import OracleResult, exact_min_tiling, exact_sweep
from .params import PipelineParams
from .pipeline import combine_absorbers, induction_step, iterated_absorbers, tile
from .ramsey import cover_bound, find_mono_copy, greedy_cover
from .sequence import SequenceSpec, derive_hypergraph, member, parse_spec
from .tiling import Embedding, Tiling, verify_tiling

__version__ = "0.1.0"
