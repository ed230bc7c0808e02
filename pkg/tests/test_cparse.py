"""Tests for variability-aware scanning of C source."""

import pytest

from app.core.cparse import (
    condition_from_expression,
    count_internal_ifdefs,
    extract_calls,
    extract_functions,
    internal_option_set,
    lex,
    scan_directives,
    scan_file,
)
from app.core.exceptions import (
    LexError,
    StructuralError,
)
from app.core.pcalg import (
    TRUE,
    And,
    Atom,
    ConfigAssignment,
    Not,
    Or,
    evaluate,
    pc_and,
)
from app.models.source import (
    DirectiveKind,
    SourceFile,
    TokenKind,
)
from tests.oracles import (
    configurations,
    preprocess,
)
from tests.synthetic import (
    OPTIONS,
    generate,
)

A, B, C = Atom("A"), Atom("B"), Atom("C")


def identifiers(text: str):
    return [t.text for t in lex(SourceFile("t.c", text)) if t.kind is TokenKind.IDENT]


def scan(text: str, path: str = "t.c"):
    return scan_file(SourceFile(path, text))


class TestLex:
    """Lexing unpreprocessed source."""

    def test_comment_masking(self):
        assert identifiers("/* foo( */ bar(1);") == ["bar"]

    def test_string_masking(self):
        assert identifiers('"foo(" ; x();') == ["x"]

    def test_char_literal_and_line_comment(self):
        assert identifiers("c = '('; // call(\nnext();") == ["c", "next"]

    def test_line_numbers(self):
        tokens = lex(SourceFile("t.c", "a\n/* x\ny */ b\n\"s\" c"))
        assert [(t.text, t.line) for t in tokens] == [("a", 1), ("b", 3), ("c", 4)]

    def test_directive_with_continuation(self):
        tokens = lex(SourceFile("t.c", "#if defined(A) && \\\n    defined(B)\nx\n#endif\n"))
        assert tokens[0].kind is TokenKind.DIRECTIVE
        assert tokens[0].text.split() == ["if", "defined(A)", "&&", "defined(B)"]
        assert tokens[1].text == "x" and tokens[1].line == 3

    def test_listing_identifiers(self, listing_text):
        names = identifiers(listing_text)
        for name in ("foo", "read_public_value", "read_private_value", "assertEquals"):
            assert name in names

    @pytest.mark.parametrize("text, line", [("a\n/* open", 2), ('x = "abc\n', 1), ("\n\nc = 'a", 3)])
    def test_unterminated(self, text, line):
        with pytest.raises(LexError) as info:
            lex(SourceFile("bad.c", text))
        assert info.value.line == line
        assert "bad.c" in str(info.value)


class TestDirectives:
    """Directive groups and branch conditions."""

    def events(self, text: str):
        return scan_directives(lex(SourceFile("t.c", text)))

    def test_ifdef(self):
        events = self.events("#ifdef A\nx;\n#endif\n")
        assert [e.kind for e in events] == [DirectiveKind.IF, DirectiveKind.ENDIF]
        assert events[0].branch_pc == A

    def test_if_one(self):
        assert self.events("#if 1\n#endif\n")[0].branch_pc == TRUE

    def test_ifndef(self):
        assert self.events("#ifndef A\n#endif\n")[0].branch_pc == Not(A)

    def test_elif_else_chain(self):
        events = self.events("#ifdef A\n#elif defined(B)\n#else\n#endif\n")
        branches = [e.branch_pc for e in events if e.kind is not DirectiveKind.ENDIF]
        assert branches[0] == A
        assert branches[1] == And((Not(A), B))
        for cfg in configurations("AB"):
            truth = [evaluate(pc, ConfigAssignment(cfg)) for pc in branches]
            assert sum(truth) == 1

    def test_groups_are_numbered(self):
        events = self.events("#ifdef A\n#ifdef B\n#endif\n#endif\n#if C\n#endif\n")
        assert [e.group for e in events] == [0, 1, 1, 0, 2, 2]

    def test_other_directives_ignored(self):
        events = self.events('#include "x.h"\n#define M(a) a\n#ifdef A\n#endif\n')
        assert len(events) == 2

    def test_arithmetic_condition(self):
        assert condition_from_expression("VERSION > 3 && defined(A)") == And((Atom("VERSION"), A))
        assert condition_from_expression("IS_ENABLED(B) || C") == And((B, C))

    @pytest.mark.parametrize(
        "text, line",
        [
            ("x;\n#endif\n", 2),
            ("#else\n", 1),
            ("#ifdef A\n#else\n#else\n#endif\n", 3),
            ("#ifdef A\n#else\n#elif B\n#endif\n", 3),
            ("\n#ifdef A\n", 2),
            ("#if (A\n#endif\n", 1),
        ],
    )
    def test_structural_errors(self, text, line):
        with pytest.raises(StructuralError) as info:
            self.events(text)
        assert info.value.line == line


class TestFunctions:
    """Function extraction and internal directive metrics."""

    def test_listing(self, listing_file):
        [foo] = listing_file.functions
        assert foo.id == "listing.c::foo"
        assert foo.name == "foo"
        assert (foo.begin_line, foo.end_line) == (2, 18)
        assert foo.size_loc == 17
        assert foo.def_pc == A
        assert foo.internal_ifdef_count == 2
        assert foo.internal_options == frozenset({"A", "B", "C"})

    def test_listing_calls(self, listing_file):
        [foo] = listing_file.functions
        calls = {call.callee_name: call.local_pc for call in foo.call_sites}
        assert calls == {
            "read_public_value": TRUE,
            "read_private_value": Or((A, B)),
            "assertEquals": C,
        }

    def test_span_starts_at_function_name(self):
        [fn] = extract_functions(SourceFile("t.c", "static int\nfoo(void)\n{\n  return 0;\n}\n"))
        assert (fn.begin_line, fn.end_line, fn.size_loc) == (2, 5, 4)

    def test_no_braces(self):
        assert extract_functions(SourceFile("t.c", "int x;\nint f(void);\n")) == []

    def test_keyword_call_excluded(self):
        [fn] = extract_functions(SourceFile("t.c", "void f(int x) {\n  if (x) g();\n  while (x) x--;\n}\n"))
        assert [(c.callee_name, c.local_pc) for c in fn.call_sites] == [("g", TRUE)]

    def test_stoplist(self):
        text = "void f(void) {\n  likely(x);\n  g();\n}\n"
        [fn] = scan_file(SourceFile("t.c", text), stoplist=["likely"]).functions
        assert [c.callee_name for c in fn.call_sites] == ["g"]

    def test_initializers_and_structs_are_not_functions(self):
        text = "struct s { int a; };\nint t[] = { 1, 2 };\nstatic int g(void) { return 0; }\n"
        assert [fn.name for fn in extract_functions(SourceFile("t.c", text))] == ["g"]

    def test_attribute_after_parameters(self):
        text = "void f(void) __attribute__((noreturn)) {\n  h();\n}\n"
        [fn] = extract_functions(SourceFile("t.c", text))
        assert fn.name == "f"

    def test_sibling_definitions(self):
        text = "#ifdef A\nint f(void) {\n  return 1;\n}\n#else\nint f(void) {\n  return 0;\n}\n#endif\n"
        functions = extract_functions(SourceFile("t.c", text))
        assert [fn.id for fn in functions] == ["t.c::f@L2", "t.c::f@L6"]
        assert [fn.def_pc for fn in functions] == [A, Not(A)]
        for cfg in configurations("A"):
            assert sum(evaluate(fn.def_pc, ConfigAssignment(cfg)) for fn in functions) == 1

    def test_nested_call_context(self):
        text = (
            "#ifdef A\n"
            "void f(void) {\n"
            "#ifdef B\n"
            "  g();\n"
            "#ifndef C\n"
            "  h();\n"
            "#endif\n"
            "#endif\n"
            "}\n"
            "#endif\n"
        )
        [fn] = extract_functions(SourceFile("t.c", text))
        assert fn.def_pc == A
        assert [(c.callee_name, c.local_pc) for c in fn.call_sites] == [("g", B), ("h", And((B, Not(C))))]

    def test_directive_group_with_elif_counts_once(self):
        text = "void f(void) {\n#if defined(A)\n  a();\n#elif defined(B)\n  b();\n#else\n  c();\n#endif\n}\n"
        scanned = scan(text)
        [fn] = scanned.functions
        assert count_internal_ifdefs(fn, scanned.events) == 1
        assert internal_option_set(fn, scanned.events) == frozenset({"A", "B"})
        assert fn.internal_ifdef_count == 1

    def test_directives_outside_are_not_internal(self):
        text = "#ifdef A\nvoid f(void) {\n  g();\n}\n#endif\n"
        [fn] = scan(text).functions
        assert fn.internal_ifdef_count == 0
        assert fn.internal_options == frozenset()

    def test_extract_calls_matches_scan(self, listing_text):
        source = SourceFile("listing.c", listing_text)
        [fn] = extract_functions(source)
        assert tuple(extract_calls(fn, lex(source))) == fn.call_sites

    def test_unbalanced_open_function(self):
        with pytest.raises(StructuralError) as info:
            extract_functions(SourceFile("t.c", "int x;\nvoid open_fn(void) {\n  if (x) {\n}\n"))
        assert "open_fn" in str(info.value)
        assert info.value.line == 2

    def test_braces_closing_in_another_branch(self):
        text = "#ifdef A\nvoid f(void) {\n  x();\n#endif\n}\n"
        with pytest.raises(StructuralError) as info:
            extract_functions(SourceFile("t.c", text))
        assert info.value.line == 5

    def test_presence_matches_preprocessor(self, listing_text):
        """A function or call survives preprocessing exactly where its condition holds."""
        [foo] = extract_functions(SourceFile("listing.c", listing_text))
        for cfg in configurations("ABC"):
            active = "\n".join(preprocess(listing_text, cfg))
            assignment = ConfigAssignment(cfg)
            assert ("int foo(int v)" in active) == evaluate(foo.def_pc, assignment)
            for call in foo.call_sites:
                present = f"{call.callee_name}(" in active
                assert present == evaluate(pc_and(foo.def_pc, call.local_pc), assignment)

    def test_presence_matches_preprocessor_on_generated_files(self):
        for seed in range(10):
            n_options = 3 + seed % 4
            corpus = generate(8, functions_per_file=8, seed=seed, n_options=n_options)
            [(path, text)] = corpus.files.items()
            functions = extract_functions(SourceFile(path, text))
            assert [fn.name for fn in functions] == [f"f{i}" for i in range(8)]
            for cfg in configurations(OPTIONS[:n_options]):
                active = preprocess(text, cfg)
                assignment = ConfigAssignment(cfg)
                for fn in functions:
                    defined = active[fn.begin_line - 1].startswith(f"int {fn.name}(")
                    assert defined == evaluate(fn.def_pc, assignment), (seed, fn.name, cfg)
                    for call in fn.call_sites:
                        present = f"{call.callee_name}(x)" in active[call.line - 1]
                        assert present == evaluate(pc_and(fn.def_pc, call.local_pc), assignment), (seed, call, cfg)
