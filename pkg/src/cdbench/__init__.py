"""Community detection benchmark for downstream graph-mining tasks."""

from cdbench.errors import ParseError, ValidationError
from cdbench.graph import Graph, load_edge_list, planted_partition
from cdbench.communities import Cover

__all__ = [
    "Cover",
    "Graph",
    "ParseError",
    "ValidationError",
    "load_edge_list",
    "planted_partition",
]

__version__ = "0.1.0"
