"""Tests for configuration-complexity metrics and centralities."""

from fractions import Fraction

import numpy as np
import pytest

from app.core.exceptions import InputError
from app.core.metrics import (
    baseline_scores,
    betweenness_centrality,
    eigenvector_centrality,
    external_option_count,
    metric_table,
    read_metric_table,
    weighted_degree,
    write_metric_table,
)
from app.core.pcalg import (
    TRUE,
    And,
    Atom,
    ConfigAssignment,
    Not,
    option_count,
    pc_and_all,
)
from app.core.vargraph import build
from app.models.graph import (
    VariationalCallGraph,
    VCGEdge,
    VCGNode,
)
from app.models.metrics import metric_header
from tests.oracles import (
    dense_eigenvector,
    path_count_betweenness,
)


def node(node_id: str, pc=TRUE) -> VCGNode:
    return VCGNode(
        id=node_id, name=node_id, file="x.c", pc=pc, size_loc=3, internal_ifdef_count=0, internal_option_count=0
    )


def graph(nodes, edges) -> VariationalCallGraph:
    """Graph from node ids and ``(source, target, pc)`` triples."""
    return VariationalCallGraph(
        {n: node(n) for n in nodes},
        [VCGEdge(s, t, pc, 1 + option_count(pc)) for s, t, pc in edges],
    )


def random_strongly_connected(rng: np.random.Generator, n: int, extra: int, ring: bool = True):
    """Ring through every node plus random chords, with random option conditions.

    Without the ring the graph is just ``extra`` random edges and need not be connected.
    """
    names = [f"n{i:02d}" for i in range(n)]
    pairs = {(names[i], names[(i + 1) % n]) for i in range(n)} if ring else set()
    while len(pairs) < (n if ring else 0) + extra:
        s, t = rng.choice(n, size=2, replace=False)
        pairs.add((names[s], names[t]))
    edges = []
    for s, t in sorted(pairs):
        k = int(rng.integers(0, 4))
        edges.append((s, t, pc_and_all(Atom(f"O{j}") for j in rng.choice(8, size=k, replace=False))))
    return graph(names, edges)


class TestSimpleMetrics:
    """Metrics taken from the scan."""

    def test_listing_values(self, listing_file):
        g = build([listing_file])
        [row], warnings = metric_table(g)
        assert warnings == []
        assert (row.internal_ifdefs, row.internal_options, row.external_options) == (2, 3, 1)
        assert row.size_loc == 17
        assert row.vulnerable is None

    def test_external_option_count(self):
        assert external_option_count(node("f", And((Atom("A"), Not(Atom("B")))))) == 2
        assert external_option_count(node("f")) == 0


class TestDegree:
    """Weighted degree."""

    def test_sums_weights(self):
        g = graph("abc", [("a", "b", Atom("A")), ("a", "c", TRUE), ("c", "b", And((Atom("A"), Atom("B"))))])
        incoming, outgoing = weighted_degree(g)
        assert outgoing.values == {"a": 3, "b": 0, "c": 3}
        assert incoming.values == {"a": 0, "b": 5, "c": 1}


class TestEigenvector:
    """Power-iteration eigenvector centrality."""

    def test_symmetric_pair(self):
        scores = eigenvector_centrality(["a", "b"], [("a", "b", 1), ("b", "a", 1)])
        assert scores.values == pytest.approx({"a": 1.0, "b": 1.0})
        assert scores.converged

    def test_no_edges_is_degenerate(self):
        scores = eigenvector_centrality(["a", "b"], [])
        assert scores.degenerate
        assert scores.values == {"a": 0.0, "b": 0.0}

    def test_weights_shift_centrality(self):
        # a <-> b with weight 3, b <-> c with weight 1
        edges = [("a", "b", 3), ("b", "a", 3), ("b", "c", 1), ("c", "b", 1)]
        scores = eigenvector_centrality("abc", edges)
        assert scores.values["b"] == pytest.approx(1.0)
        assert scores.values["a"] > scores.values["c"]
        assert scores.values == pytest.approx(dense_eigenvector("abc", edges), abs=1e-9)

    def test_iteration_cap(self):
        ring = [("a", "b", 1), ("b", "c", 1), ("c", "a", 1)]
        scores = eigenvector_centrality("abc", ring, start=[1, 0, 0], max_iterations=3)
        assert not scores.converged
        assert scores.iterations == 3

    def test_path_takes_acyclic_limit(self):
        scores = eigenvector_centrality("abc", [("a", "b", 1), ("b", "c", 1)])
        assert scores.values == {"a": 0.0, "b": 0.0, "c": 1.0}
        assert not scores.converged
        assert not scores.degenerate
        assert scores.iterations == 2

    def test_acyclic_limit_matches_long_iteration(self):
        edges = [("a", "b", 2), ("a", "c", 1), ("b", "d", 3), ("c", "d", 1), ("a", "d", 1), ("c", "e", 4)]
        scores = eigenvector_centrality("abcde", edges)
        shifted = np.eye(5)
        for source, target, weight in edges:
            shifted["abcde".index(target), "abcde".index(source)] += weight
        x = np.linalg.matrix_power(shifted, 10**6) @ np.ones(5)
        expected = dict(zip("abcde", x / x.max()))
        assert scores.values == pytest.approx(expected, abs=1e-5)
        assert scores.iterations == 2

    def test_rejects_bad_start(self):
        with pytest.raises(InputError):
            eigenvector_centrality("ab", [("a", "b", 1)], start=[0, 0])

    def test_matches_dense_solver(self):
        rng = np.random.default_rng(42)
        for trial in range(50):
            n = int(rng.integers(5, 21))
            g = random_strongly_connected(rng, n, int(rng.integers(n // 2, 2 * n + 1)))
            edges = [(e.source, e.target, e.weight) for e in g.edges]
            scores = eigenvector_centrality(g.nodes, edges, start=rng.random(n) + 0.1)
            assert scores.converged, trial
            expected = dense_eigenvector(sorted(g.nodes), edges)
            assert scores.values == pytest.approx(expected, abs=1e-6), trial

    def test_start_vector_independent(self):
        rng = np.random.default_rng(8)
        g = random_strongly_connected(rng, 15, 20)
        edges = [(e.source, e.target, e.weight) for e in g.edges]
        first = eigenvector_centrality(g.nodes, edges)
        second = eigenvector_centrality(g.nodes, edges, start=rng.random(len(g.nodes)) + 0.1)
        assert first.values == pytest.approx(second.values, abs=1e-6)


class TestBetweenness:
    """Weighted directed betweenness."""

    def test_path(self):
        g = graph("abc", [("a", "b", TRUE), ("b", "c", TRUE)])
        assert betweenness_centrality(g).values == {"a": 0.0, "b": 1.0, "c": 0.0}

    def test_inverse_distance_prefers_complex_edges(self):
        # a->b->d with weights 3, a->c->d with weights 1: only the b route is shortest under 1/w
        heavy = And((Atom("A"), Atom("B")))
        g = graph("abcd", [("a", "b", heavy), ("b", "d", heavy), ("a", "c", TRUE), ("c", "d", TRUE)])
        inverse = betweenness_centrality(g, "inverse").values
        direct = betweenness_centrality(g, "direct").values
        assert (inverse["b"], inverse["c"]) == (1.0, 0.0)
        assert (direct["b"], direct["c"]) == (0.0, 1.0)

    @pytest.mark.parametrize("mode", ["inverse", "direct"])
    def test_matches_path_counting(self, mode):
        rng = np.random.default_rng(17)
        for trial in range(30):
            n = int(rng.integers(4, 16))
            g = random_strongly_connected(rng, n, int(rng.integers(n // 2, n + 1)), ring=trial % 2 == 0)
            edges = [
                (e.source, e.target, Fraction(1, e.weight) if mode == "inverse" else Fraction(e.weight))
                for e in g.edges
            ]
            expected = path_count_betweenness(sorted(g.nodes), edges)
            result = betweenness_centrality(g, mode).values
            assert result == pytest.approx({k: float(v) for k, v in expected.items()}, abs=1e-9)


class TestBaselines:
    """Unweighted centralities on projected configurations."""

    def test_projection_changes_baseline(self):
        g = graph("abc", [("a", "b", Atom("A")), ("b", "c", TRUE)])
        allyes = baseline_scores(g, ConfigAssignment.all_true())
        allno = baseline_scores(g, ConfigAssignment.all_false())
        assert allyes["b"].between == 1.0
        assert allno["b"].between == 0.0
        assert (allyes["a"].out_degree, allno["a"].out_degree) == (1, 0)

    def test_absent_node_scores_zero(self):
        g = VariationalCallGraph({"a": node("a", Atom("A")), "b": node("b")}, [])
        rows, _ = metric_table(g, [("allno", ConfigAssignment.all_false())])
        row = next(r for r in rows if r.id == "a")
        assert row.baselines["allno"].in_degree == 0
        assert row.baselines["allno"].eigen == 0.0


class TestMetricTable:
    """The per-function metric table."""

    def test_rows_sorted_and_labeled(self):
        g = graph(["b", "a", "c"], [("a", "b", TRUE)])
        rows, warnings = metric_table(g, labels={"a": True, "b": False, "zz": True})
        assert [r.id for r in rows] == ["a", "b", "c"]
        assert [r.vulnerable for r in rows] == [True, False, None]
        assert warnings == ["label for unknown function id zz"]

    def test_empty_graph(self):
        assert metric_table(VariationalCallGraph()) == ([], [])

    def test_csv_layout_and_reread(self):
        g = graph("abc", [("a", "b", Atom("A")), ("b", "c", TRUE), ("c", "a", TRUE)])
        rows, _ = metric_table(g, [("allyes", ConfigAssignment.all_true())], labels={"a": True})
        text = write_metric_table(rows, ["allyes"])
        header = text.splitlines()[0].split(",")
        assert header == metric_header(["allyes"])
        assert header[-5:] == ["allyes_in_deg", "allyes_out_deg", "allyes_eigen", "allyes_between", "vulnerable"]
        again, labels = read_metric_table(text)
        assert labels == ["allyes"]
        assert [r.id for r in again] == ["a", "b", "c"]
        assert again[0].vulnerable is True and again[1].vulnerable is None
        assert again[1].w_eigen == pytest.approx(rows[1].w_eigen, rel=1e-11)

    def test_rejects_bad_header(self):
        with pytest.raises(InputError):
            read_metric_table("id,name\nx,y\n")
