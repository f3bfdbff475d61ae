"""Lossy summaries of attributed graphs by sampled agglomerative merging."""
from .graph import Graph, GraphFormatError, count_triangles, from_edges, load_attributes, load_edge_list
from .summarizer import MergeTrace, SummarizerConfig, default_backend, have_core, summarize
from .summary import (
    Summary,
    deserialize_summary,
    expected_adjacency,
    initial_summary,
    normalized_re,
    purity,
    reconstruction_error_closed_form,
    reconstruction_error_exact,
    serialize_summary,
    storage_cost_bits,
)

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "GraphFormatError",
    "MergeTrace",
    "Summary",
    "SummarizerConfig",
    "count_triangles",
    "default_backend",
    "deserialize_summary",
    "expected_adjacency",
    "from_edges",
    "have_core",
    "initial_summary",
    "load_attributes",
    "load_edge_list",
    "normalized_re",
    "purity",
    "reconstruction_error_closed_form",
    "reconstruction_error_exact",
    "serialize_summary",
    "storage_cost_bits",
    "summarize",
]
