"""Configuration-complexity metrics.

Simple metrics come straight from the scan (internal directive groups, internal options) and the
node condition (external options). Structural metrics are centralities of the variational call
graph with edge weights ``1 + #options``, next to unweighted baselines computed on the plain call
graph of chosen configurations.
"""

from typing import (
    Dict,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
)

import networkx as nx
import numpy as np
from scipy import sparse

from app.core.config import settings
from app.core.exceptions import InputError
from app.core.logging import logger
from app.core.pcalg import (
    ConfigAssignment,
    option_count,
)
from app.core.vargraph import project
from app.models.graph import (
    ProjectedGraph,
    VariationalCallGraph,
    VCGNode,
)
from app.models.metrics import (
    BaselineScores,
    CentralityScores,
    MetricRow,
    metric_header,
)
from app.utils.graph import (
    add_distances,
    projection_to_digraph,
    to_digraph,
)
from app.utils.tables import (
    parse_bool,
    read_csv,
    render_csv,
)


def external_option_count(node: VCGNode) -> int:
    """Number of distinct options in the conditions around the whole function."""
    return option_count(node.pc)


def weighted_degree(g: VariationalCallGraph) -> Tuple[CentralityScores, CentralityScores]:
    """Sum of edge weights into and out of every node."""
    incoming = {node_id: 0 for node_id in g.nodes}
    outgoing = {node_id: 0 for node_id in g.nodes}
    for edge in g.edges:
        outgoing[edge.source] += edge.weight
        incoming[edge.target] += edge.weight
    return CentralityScores(incoming), CentralityScores(outgoing)


def baseline_degree(p: ProjectedGraph) -> Tuple[CentralityScores, CentralityScores]:
    """Plain edge counts into and out of every node of a projection."""
    incoming = {node_id: 0 for node_id in p.nodes}
    outgoing = {node_id: 0 for node_id in p.nodes}
    for source, target in p.edges:
        outgoing[source] += 1
        incoming[target] += 1
    return (
        CentralityScores(incoming, mode="baseline", config=p.config),
        CentralityScores(outgoing, mode="baseline", config=p.config),
    )


def eigenvector_centrality(
    nodes: Iterable[str],
    edges: Iterable[Tuple[str, str, float]],
    start: Optional[Sequence[float]] = None,
    tolerance: Optional[float] = None,
    max_iterations: Optional[int] = None,
    mode: str = "weighted",
    config: Optional[ConfigAssignment] = None,
) -> CentralityScores:
    """Eigenvector centrality by power iteration over incoming weighted sums.

    Each step computes ``x + A^T x`` (the identity shift keeps periodic graphs from oscillating
    without moving the dominant eigenvector) and rescales so that the largest component is 1.

    Args:
        nodes: Node ids.
        edges: ``(source, target, weight)`` triples; a node is ranked by who calls it.
        start: Non-negative start vector in sorted node order (default all ones).
        tolerance: Stop when no component changes by this much (default ``settings.EIGEN_TOLERANCE``).
        max_iterations: Iteration cap (default ``settings.EIGEN_MAX_ITERATIONS``).
        mode: ``weighted`` or ``baseline``, recorded on the result.
        config: Projection configuration, recorded on the result.

    Returns:
        CentralityScores: Max-normalized scores; ``degenerate`` when there are no edges and
        ``converged`` False when the cap was reached. An acyclic graph never converges
        geometrically; it gets the exact limit direction of the iteration without iterating,
        flagged not converged, with ``iterations`` set to the longest path length.
    """
    tolerance = settings.EIGEN_TOLERANCE if tolerance is None else tolerance
    max_iterations = settings.EIGEN_MAX_ITERATIONS if max_iterations is None else max_iterations
    ids = sorted(set(nodes))
    index = {node_id: i for i, node_id in enumerate(ids)}
    triples = [(index[s], index[t], float(w)) for s, t, w in edges]
    if not triples:
        return CentralityScores({node_id: 0.0 for node_id in ids}, mode=mode, config=config, degenerate=True)

    n = len(ids)
    rows, cols, weights = zip(*triples)
    transposed = sparse.csr_matrix((weights, (cols, rows)), shape=(n, n))

    x = np.ones(n) if start is None else np.asarray(start, dtype=float)
    if x.shape != (n,) or (x < 0).any() or not x.any():
        raise InputError("start vector must be non-negative, non-zero and match the node count")
    x = x / x.max()

    if nx.is_directed_acyclic_graph(nx.DiGraph([(s, t) for s, t, _ in triples])):
        # (I + A^T)^k x is dominated by its longest-path term, so the direction is known exactly
        iterations = 0
        following = transposed @ x
        while following.any():
            x = following / following.max()
            iterations += 1
            following = transposed @ x
        logger.info("eigenvector_acyclic_limit", mode=mode, nodes=n, path_length=iterations)
        return CentralityScores(
            {node_id: float(x[i]) for node_id, i in index.items()},
            mode=mode,
            config=config,
            converged=False,
            iterations=iterations,
        )

    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        following = x + transposed @ x
        following /= following.max()
        change = np.abs(following - x).max()
        x = following
        if change < tolerance:
            converged = True
            break

    if not converged:
        logger.warning("eigenvector_not_converged", mode=mode, nodes=n, iterations=iterations)
    return CentralityScores(
        {node_id: float(x[i]) for node_id, i in index.items()},
        mode=mode,
        config=config,
        converged=converged,
        iterations=iterations,
    )


def betweenness_centrality(g: VariationalCallGraph, distance_mode: Optional[str] = None) -> CentralityScores:
    """Directed betweenness over weighted edge distances, endpoints excluded.

    Args:
        g: The variational call graph.
        distance_mode: ``inverse`` (distance 1/weight, favouring complex edges) or ``direct``
            (distance = weight); default ``settings.BETWEENNESS_MODE``.

    Returns:
        CentralityScores: Unnormalized pair-dependency sums.
    """
    distance_mode = distance_mode or settings.BETWEENNESS_MODE
    graph = add_distances(to_digraph(g), distance_mode)
    values = nx.betweenness_centrality(graph, weight="distance", normalized=False)
    return CentralityScores({node_id: float(v) for node_id, v in values.items()})


def baseline_betweenness(p: ProjectedGraph) -> CentralityScores:
    """Directed unweighted betweenness of a projection."""
    values = nx.betweenness_centrality(projection_to_digraph(p), weight=None, normalized=False)
    return CentralityScores({node_id: float(v) for node_id, v in values.items()}, mode="baseline", config=p.config)


def baseline_scores(g: VariationalCallGraph, cfg: ConfigAssignment) -> Dict[str, BaselineScores]:
    """Unweighted degree, eigenvector and betweenness of every node on one projected configuration."""
    p = project(g, cfg)
    incoming, outgoing = baseline_degree(p)
    eigen = eigenvector_centrality(p.nodes, ((s, t, 1) for s, t in p.edges), mode="baseline", config=cfg)
    between = baseline_betweenness(p)
    return {
        node_id: BaselineScores(
            in_degree=int(incoming.get(node_id)),
            out_degree=int(outgoing.get(node_id)),
            eigen=float(eigen.get(node_id)),
            between=float(between.get(node_id)),
        )
        for node_id in p.nodes
    }


def metric_table(
    g: VariationalCallGraph,
    cfg_baselines: Sequence[Tuple[str, ConfigAssignment]] = (),
    labels: Optional[Mapping[str, bool]] = None,
    distance_mode: Optional[str] = None,
) -> Tuple[List[MetricRow], List[str]]:
    """Compute one metric row per node.

    Args:
        g: The variational call graph.
        cfg_baselines: ``(label, configuration)`` pairs for the unweighted baseline columns.
        labels: Vulnerability label per function id; missing ids stay unknown.
        distance_mode: Betweenness distance mode.

    Returns:
        Tuple[List[MetricRow], List[str]]: Rows sorted by id, and warnings about label ids
        that name no node.
    """
    labels = labels or {}
    warnings = [f"label for unknown function id {fid}" for fid in sorted(labels) if fid not in g.nodes]
    for warning in warnings:
        logger.warning("unknown_label_id", detail=warning)
    if not g.nodes:
        return [], warnings

    w_in, w_out = weighted_degree(g)
    w_eigen = eigenvector_centrality(g.nodes, ((e.source, e.target, e.weight) for e in g.edges))
    w_between = betweenness_centrality(g, distance_mode)
    baselines = {label: baseline_scores(g, cfg) for label, cfg in cfg_baselines}

    rows = [
        MetricRow(
            id=node.id,
            file=node.file,
            name=node.name,
            size_loc=node.size_loc,
            internal_ifdefs=node.internal_ifdef_count,
            internal_options=node.internal_option_count,
            external_options=external_option_count(node),
            w_in_degree=int(w_in.get(node.id)),
            w_out_degree=int(w_out.get(node.id)),
            w_eigen=float(w_eigen.get(node.id)),
            w_between=float(w_between.get(node.id)),
            baselines={label: scores.get(node.id, BaselineScores()) for label, scores in baselines.items()},
            vulnerable=labels.get(node.id),
        )
        for node in sorted(g.nodes.values(), key=lambda n: n.id)
    ]
    logger.info("metric_table_computed", rows=len(rows), baselines=list(baselines))
    return rows, warnings


def write_metric_table(rows: Sequence[MetricRow], baseline_labels: Sequence[str]) -> str:
    """Render the metric table CSV."""
    header = metric_header(list(baseline_labels))
    return render_csv(header, ([row.columns()[column] for column in header] for row in rows))


def read_metric_table(text: str) -> Tuple[List[MetricRow], List[str]]:
    """Parse a metric table CSV back into rows.

    Returns:
        Tuple[List[MetricRow], List[str]]: Rows and the baseline labels found in the header.

    Raises:
        InputError: If a required column is missing or a cell is malformed.
    """
    records = read_csv(text)
    header = text.splitlines()[0].split(",") if text.strip() else []
    labels = [column[: -len("_in_deg")] for column in header if column.endswith("_in_deg") and column != "w_in_deg"]
    expected = metric_header(labels)
    if header and header != expected:
        raise InputError(f"metric table header does not match the documented layout: {','.join(header)}")
    rows: List[MetricRow] = []
    for number, record in enumerate(records, start=2):
        try:
            rows.append(
                MetricRow(
                    id=record["id"],
                    file=record["file"],
                    name=record["name"],
                    size_loc=int(record["size_loc"]),
                    internal_ifdefs=int(record["internal_ifdefs"]),
                    internal_options=int(record["internal_options"]),
                    external_options=int(record["external_options"]),
                    w_in_degree=int(record["w_in_deg"]),
                    w_out_degree=int(record["w_out_deg"]),
                    w_eigen=float(record["w_eigen"]),
                    w_between=float(record["w_between"]),
                    baselines={
                        label: BaselineScores(
                            in_degree=int(record[f"{label}_in_deg"]),
                            out_degree=int(record[f"{label}_out_deg"]),
                            eigen=float(record[f"{label}_eigen"]),
                            between=float(record[f"{label}_between"]),
                        )
                        for label in labels
                    },
                    vulnerable=parse_bool(record["vulnerable"]),
                )
            )
        except (KeyError, ValueError) as e:
            raise InputError(f"metric table line {number}: {e}")
    return rows, labels
