"""Tests for variational call graph construction and exchange."""

import json

import pytest

from app.core.cparse import scan_file
from app.core.exceptions import (
    CorpusError,
    GraphValidationError,
    InputError,
)
from app.core.pcalg import (
    FALSE,
    TRUE,
    And,
    Atom,
    ConfigAssignment,
    Not,
    Or,
    evaluate,
    option_count,
)
from app.core.vargraph import (
    build,
    edge_weight,
    export,
    import_json,
    project,
)
from app.models.source import (
    CallSite,
    FunctionRecord,
    ScannedFile,
    SourceFile,
)
from tests.oracles import (
    configurations,
    generated_call_graph,
    preprocess,
)
from tests.synthetic import (
    OPTIONS,
    generate,
)

A, B, C = Atom("A"), Atom("B"), Atom("C")


def scanned(path: str, text: str, file_pc=TRUE) -> ScannedFile:
    return scan_file(SourceFile(path, text, file_pc))


CALLER = "void main_fn(void) {\n#ifdef B\n  g();\n#endif\n#ifdef C\n  g();\n#endif\n  missing();\n}\n"
CALLEE = "void g(void) {\n}\n"


class TestBuild:
    """Node and edge construction."""

    def test_merged_edge(self):
        g = build([scanned("a.c", CALLER), scanned("b.c", CALLEE)])
        assert sorted(g.nodes) == ["a.c::main_fn", "b.c::g"]
        [edge] = g.edges
        assert (edge.source, edge.target) == ("a.c::main_fn", "b.c::g")
        assert edge.pc == Or((B, C))
        assert edge.weight == 3

    def test_unresolved_calls_kept(self):
        g = build([scanned("a.c", CALLER), scanned("b.c", CALLEE)])
        assert [(u.caller, u.callee, u.line) for u in g.unresolved_calls] == [("a.c::main_fn", "missing", 8)]

    def test_file_condition_joins_node_condition(self):
        g = build([scanned("a.c", "#ifdef A\nvoid f(void) {\n}\n#endif\n", file_pc=B)])
        assert g.nodes["a.c::f"].pc == And((B, A))

    def test_unsatisfiable_node_dropped(self):
        g = build([scanned("a.c", "#ifdef A\nvoid f(void) {\n}\n#endif\n", file_pc=Not(A))])
        assert g.nodes == {}

    def test_unsatisfiable_edge_dropped(self):
        caller = "#ifdef A\nvoid f(void) {\n  g();\n}\n#endif\n"
        callee = "#ifndef A\nvoid g(void) {\n}\n#endif\n"
        g = build([scanned("a.c", caller), scanned("b.c", callee)])
        assert len(g.nodes) == 2
        assert g.edges == []
        assert g.unresolved_calls == []

    def test_call_fans_out_to_every_definition(self):
        callee = "#ifdef A\nint g(void) {\n  return 1;\n}\n#else\nint g(void) {\n  return 0;\n}\n#endif\n"
        g = build([scanned("a.c", "void f(void) {\n  g();\n}\n"), scanned("b.c", callee)])
        assert {(e.target, e.pc) for e in g.edges} == {("b.c::g@L2", A), ("b.c::g@L6", Not(A))}

    def test_edge_weight(self):
        assert edge_weight(TRUE) == 1
        assert edge_weight(And((A, Not(B)))) == 3

    def test_duplicate_ids(self):
        fn = FunctionRecord(id="a.c::f", name="f", file="a.c", begin_line=1, end_line=2)
        other = FunctionRecord(id="a.c::f", name="f", file="a.c", begin_line=5, end_line=6)
        with pytest.raises(CorpusError):
            build([ScannedFile("a.c", TRUE, [fn]), ScannedFile("a.c", TRUE, [other])])

    def test_overlapping_definitions(self):
        first = FunctionRecord(id="a.c::f@L1", name="f", file="a.c", begin_line=1, end_line=5)
        second = FunctionRecord(id="a.c::f@L3", name="f", file="a.c", begin_line=3, end_line=8)
        with pytest.raises(CorpusError):
            build([ScannedFile("a.c", TRUE, [first, second])])

    def test_edges_from_records(self):
        caller = FunctionRecord(
            id="a.c::f",
            name="f",
            file="a.c",
            begin_line=1,
            end_line=3,
            call_sites=(CallSite("g", 2, A), CallSite("g", 3, FALSE)),
        )
        callee = FunctionRecord(id="a.c::g", name="g", file="a.c", begin_line=5, end_line=6, def_pc=B)
        g = build([ScannedFile("a.c", TRUE, [caller, callee])])
        assert [(e.pc, e.weight) for e in g.edges] == [(And((A, B)), 3)]

    def test_weights_follow_option_counts(self):
        edges = 0
        for seed in range(1000):
            corpus = generate(12, functions_per_file=4, seed=seed, n_options=3 + seed % 8)
            g = build([scanned(path, text) for path, text in corpus.files.items()])
            for edge in g.edges:
                assert edge.weight == 1 + option_count(edge.pc), (seed, edge)
            edges += len(g.edges)
        assert edges > 1000


class TestProject:
    """Single-configuration projection."""

    def test_projection(self):
        g = build([scanned("a.c", CALLER), scanned("b.c", CALLEE)])
        assert project(g, ConfigAssignment.all_false()).edges == frozenset()
        p = project(g, ConfigAssignment({"C": True}))
        assert p.edges == frozenset({("a.c::main_fn", "b.c::g")})
        assert p.nodes == frozenset(g.nodes)

    def test_projection_matches_preprocessor(self):
        caller = "#ifdef A\nvoid f(void) {\n#if defined(B) || defined(C)\n  g();\n#endif\n}\n#endif\n"
        callee = "#ifndef C\nvoid g(void) {\n}\n#endif\n"
        g = build([scanned("a.c", caller), scanned("b.c", callee)])
        for cfg in configurations("ABC"):
            p = project(g, ConfigAssignment(cfg))
            caller_text = "\n".join(preprocess(caller, cfg))
            callee_text = "\n".join(preprocess(callee, cfg))
            assert ("a.c::f" in p.nodes) == ("void f" in caller_text)
            assert ("b.c::g" in p.nodes) == ("void g" in callee_text)
            expected = "g();" in caller_text and "void g" in callee_text
            assert (("a.c::f", "b.c::g") in p.edges) == expected

    def test_projection_matches_preprocessed_generated_corpora(self):
        for seed in range(20):
            corpus = generate(10, functions_per_file=4, seed=seed, n_options=3 + seed % 6)
            g = build([scanned(path, text) for path, text in corpus.files.items()])
            for cfg in configurations(OPTIONS[: 3 + seed % 6]):
                p = project(g, ConfigAssignment(cfg))
                nodes, edges = generated_call_graph(corpus.files, cfg)
                assert (p.nodes, p.edges) == (nodes, edges), (seed, cfg)

    def test_projected_edges_are_a_subset(self):
        g = build([scanned("a.c", CALLER), scanned("b.c", CALLEE)])
        for cfg in configurations("BC"):
            p = project(g, ConfigAssignment(cfg))
            for source, target in p.edges:
                assert source in p.nodes and target in p.nodes
                edge = next(e for e in g.edges if (e.source, e.target) == (source, target))
                assert evaluate(edge.pc, ConfigAssignment(cfg))


class TestExport:
    """JSON and DOT exchange formats."""

    def graph(self):
        caller = "void f(void) {\n#ifdef A\n  g();\n#endif\n  h();\n}\n"
        return build([scanned("a.c", caller), scanned("b.c", "void g(void) {\n}\n")])

    def test_dot_edge_label(self):
        text = export(self.graph(), "dot")
        assert text.startswith("digraph vcg {\n")
        assert '"a.c::f" -> "b.c::g" [label="defined(A) [w=2]"];' in text

    def test_json_layout(self):
        document = json.loads(export(self.graph(), "json"))
        assert document["edges"] == [{"from": "a.c::f", "to": "b.c::g", "pc": "defined(A)", "weight": 2}]
        assert document["unresolved"] == [{"from": "a.c::f", "callee": "h", "line": 5}]
        assert [node["id"] for node in document["nodes"]] == ["a.c::f", "b.c::g"]

    def test_json_roundtrip(self):
        g = self.graph()
        loaded = import_json(export(g, "json"))
        assert loaded.nodes == g.nodes
        assert loaded.edges == g.edges
        assert loaded.unresolved_calls == g.unresolved_calls
        assert export(loaded, "json") == export(g, "json")

    def test_unknown_format(self):
        with pytest.raises(InputError):
            export(self.graph(), "graphml")

    def document(self):
        return json.loads(export(self.graph(), "json"))

    def test_rejects_inconsistent_weight(self):
        document = self.document()
        document["edges"][0]["weight"] = 5
        with pytest.raises(GraphValidationError) as info:
            import_json(json.dumps(document))
        assert "a.c::f->b.c::g" in str(info.value)

    def test_rejects_unknown_node(self):
        document = self.document()
        document["edges"][0]["to"] = "c.c::nowhere"
        with pytest.raises(GraphValidationError) as info:
            import_json(json.dumps(document))
        assert "c.c::nowhere" in str(info.value)

    def test_rejects_unsatisfiable_pc(self):
        document = self.document()
        document["nodes"][0]["pc"] = "defined(A) && !defined(A)"
        with pytest.raises(GraphValidationError):
            import_json(json.dumps(document))

    def test_rejects_duplicate_node(self):
        document = self.document()
        document["nodes"].append(dict(document["nodes"][0]))
        with pytest.raises(GraphValidationError) as info:
            import_json(json.dumps(document))
        assert "duplicate node id" in str(info.value)

    def test_rejects_malformed_pc_and_json(self):
        document = self.document()
        document["edges"][0]["pc"] = "defined(A) &&"
        with pytest.raises(GraphValidationError):
            import_json(json.dumps(document))
        with pytest.raises(GraphValidationError):
            import_json("{")
