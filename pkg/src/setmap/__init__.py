"""Constructive embeddings that avoid adversarial set mappings."""

from .embedder import Embedding, PipelineConfig, embed_pipeline, run_algorithm1, verify_clean
from .graphs import Pattern, dyadic_plan, generate, pad, parse_pattern, serialize_pattern
from .lll import lll_condition, make_problem, moser_tardos, required_host_size
from .mappings import (
    SetMapping,
    gen_random_disjoint_edge,
    gen_random_incident_edge,
    gen_uniform_disjoint,
    parse_mapping,
    reduce_to_disjoint,
    serialize_mapping,
    well_loaded,
)
from .oracle import certify_lower_bound, find_clean_copy, find_f_free_copy, scan_w

__version__ = "0.1.0"
