"""This file contains the graph utilities for the analyzer."""

import math

import networkx as nx

from app.models.graph import (
    ProjectedGraph,
    VariationalCallGraph,
)

DISTANCE_MODES = ("inverse", "direct")


def to_digraph(g: VariationalCallGraph) -> nx.DiGraph:
    """Convert a variational call graph to a weighted networkx DiGraph.

    Args:
        g: The variational call graph.

    Returns:
        nx.DiGraph: Nodes keyed by id; every edge has a ``weight`` attribute.
    """
    graph = nx.DiGraph()
    graph.add_nodes_from(sorted(g.nodes))
    graph.add_weighted_edges_from((e.source, e.target, e.weight) for e in g.edges)
    return graph


def projection_to_digraph(p: ProjectedGraph) -> nx.DiGraph:
    """Convert a projected graph to an unweighted networkx DiGraph (``weight`` 1 on every edge).

    Args:
        p: The projection.

    Returns:
        nx.DiGraph: Nodes and edges of the projection.
    """
    graph = nx.DiGraph()
    graph.add_nodes_from(sorted(p.nodes))
    graph.add_weighted_edges_from((source, target, 1) for source, target in sorted(p.edges))
    return graph


def add_distances(graph: nx.DiGraph, mode: str = "inverse") -> nx.DiGraph:
    """Attach a ``distance`` attribute derived from ``weight``.

    Inverse distances are scaled by the least common multiple of all weights so that they stay
    exact integers and equally long paths compare equal; scaling leaves betweenness unchanged.

    Args:
        graph: A graph whose edges carry integer ``weight`` >= 1.
        mode: ``inverse`` (distance 1/weight) or ``direct`` (distance weight).

    Returns:
        nx.DiGraph: The same graph, for chaining.

    Raises:
        ValueError: If the mode is unknown.
    """
    if mode not in DISTANCE_MODES:
        raise ValueError(f"unknown distance mode {mode!r}; expected one of {', '.join(DISTANCE_MODES)}")
    scale = math.lcm(*(w for _, _, w in graph.edges(data="weight"))) if graph.number_of_edges() else 1
    for _, _, data in graph.edges(data=True):
        data["distance"] = scale // data["weight"] if mode == "inverse" else data["weight"]
    return graph
