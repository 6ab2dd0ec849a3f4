"""Personalized subgraph federated learning simulator.

Thin python surface over the C++ core: dataset ingestion and generation,
multilevel partitioning into client subgraphs, heterogeneity diagnostics,
and the federated training loop with the adaptive neighbor sampler.
"""

from ._fedgrains import (
    ClientDataset,
    Graph,
    SplitMask,
    build_disjoint,
    build_overlapping,
    clustering_coefficient,
    count_missing_links,
    degree_heterogeneity,
    edge_cut,
    graph,
    induced_subgraph,
    label_heterogeneity,
    load_dataset,
    make_splits,
    make_synth,
    partition,
    save_dataset,
    train,
)

__all__ = [
    "ClientDataset",
    "Graph",
    "SplitMask",
    "build_disjoint",
    "build_overlapping",
    "clustering_coefficient",
    "count_missing_links",
    "degree_heterogeneity",
    "edge_cut",
    "graph",
    "induced_subgraph",
    "label_heterogeneity",
    "load_dataset",
    "make_splits",
    "make_synth",
    "partition",
    "save_dataset",
    "train",
]
