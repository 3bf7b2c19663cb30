"""bibridge: bipartite incidence networks, projections, clustering, bridging.

The package builds an article-concept bipartite graph from incidence
files, derives its two one-mode projections (unit-weight concept
co-occurrence and idf-weighted cosine article similarity), clusters all
three representations with seeded multi-run Louvain (Newman modularity on
the projections, the bipartite modularity variant on the two-mode graph),
and links the three partitions through co-clustering overlap so concept
clusters inherit category labels from article clusters.
"""

from bibridge.graphs import (
    BipartiteGraph,
    GraphError,
    NodeKind,
    NodeMeta,
    NodeTable,
    Partition,
    WeightedGraph,
)

__version__ = "0.1.0"

__all__ = [
    "BipartiteGraph",
    "GraphError",
    "NodeKind",
    "NodeMeta",
    "NodeTable",
    "Partition",
    "WeightedGraph",
    "__version__",
]
