"""Variational call graph construction, projection and exchange formats."""

import json
from collections import defaultdict
from typing import (
    Dict,
    Iterable,
    List,
    Tuple,
)

from pydantic import ValidationError

from app.core.exceptions import (
    CorpusError,
    GraphValidationError,
    InputError,
)
from app.core.logging import logger
from app.core.pcalg import (
    ConfigAssignment,
    PresenceCondition,
    evaluate,
    is_satisfiable,
    option_count,
    parse_pc,
    pc_and,
    pc_or,
    render,
)
from app.models.graph import (
    ProjectedGraph,
    UnresolvedCall,
    VariationalCallGraph,
    VCGEdge,
    VCGNode,
)
from app.models.source import (
    FunctionRecord,
    ScannedFile,
)
from app.schemas.graph import (
    GraphDocument,
    GraphEdgeSchema,
    GraphNodeSchema,
    UnresolvedCallSchema,
)

EXPORT_FORMATS = ("json", "dot")


def edge_weight(pc: PresenceCondition) -> int:
    """One plus the number of configuration options constraining an edge."""
    return 1 + option_count(pc)


def build(corpus: Iterable[ScannedFile]) -> VariationalCallGraph:
    """Build the variational call graph of a scanned corpus.

    Node conditions conjoin the file condition with the definition condition; nodes that no
    configuration includes are dropped. A call links its caller to every node of the called name,
    under ``caller.pc && call.local_pc && callee.pc``; candidates for the same ordered pair merge by
    disjunction and the weight is recomputed from the merged condition.

    Raises:
        CorpusError: On duplicate node ids or overlapping definitions of one name in one file.
    """
    nodes: Dict[str, VCGNode] = {}
    records: Dict[str, FunctionRecord] = {}
    seen_ids = set()
    spans: Dict[Tuple[str, str], List[Tuple[int, int]]] = defaultdict(list)
    dropped_nodes = 0

    for scanned in corpus:
        for fn in scanned.functions:
            if fn.id in seen_ids:
                raise CorpusError(f"duplicate node id {fn.id}")
            for begin, end in spans[(fn.file, fn.name)]:
                if begin <= fn.end_line and fn.begin_line <= end:
                    raise CorpusError(f"overlapping definitions of {fn.name} in {fn.file}")
            seen_ids.add(fn.id)
            spans[(fn.file, fn.name)].append((fn.begin_line, fn.end_line))

            pc = pc_and(scanned.file_pc, fn.def_pc)
            if not is_satisfiable(pc):
                dropped_nodes += 1
                logger.debug("unsatisfiable_node_dropped", node=fn.id, pc=render(pc))
                continue
            nodes[fn.id] = VCGNode(
                id=fn.id,
                name=fn.name,
                file=fn.file,
                pc=pc,
                size_loc=fn.size_loc,
                internal_ifdef_count=fn.internal_ifdef_count,
                internal_option_count=len(fn.internal_options),
                begin_line=fn.begin_line,
                end_line=fn.end_line,
            )
            records[fn.id] = fn

    by_name: Dict[str, List[str]] = defaultdict(list)
    for node_id in sorted(nodes):
        by_name[nodes[node_id].name].append(node_id)

    merged: Dict[Tuple[str, str], PresenceCondition] = {}
    unresolved: List[UnresolvedCall] = []
    dropped_edges = 0
    for caller_id in sorted(nodes):
        caller = nodes[caller_id]
        for call in records[caller_id].call_sites:
            targets = by_name.get(call.callee_name)
            if not targets:
                unresolved.append(UnresolvedCall(caller_id, call.callee_name, call.line))
                continue
            context = pc_and(caller.pc, call.local_pc)
            for target_id in targets:
                candidate = pc_and(context, nodes[target_id].pc)
                if not is_satisfiable(candidate):
                    dropped_edges += 1
                    continue
                key = (caller_id, target_id)
                merged[key] = pc_or(merged[key], candidate) if key in merged else candidate

    edges = [VCGEdge(source, target, pc, edge_weight(pc)) for (source, target), pc in sorted(merged.items())]
    unresolved.sort(key=lambda u: (u.caller, u.line, u.callee))
    logger.info(
        "graph_built",
        nodes=len(nodes),
        edges=len(edges),
        unresolved=len(unresolved),
        dropped_nodes=dropped_nodes,
        dropped_edges=dropped_edges,
    )
    return VariationalCallGraph(dict(sorted(nodes.items())), edges, unresolved)


def project(g: VariationalCallGraph, cfg: ConfigAssignment) -> ProjectedGraph:
    """Evaluate every condition under one configuration and keep what it includes."""
    included = frozenset(node_id for node_id, node in g.nodes.items() if evaluate(node.pc, cfg))
    edges = frozenset(
        (edge.source, edge.target)
        for edge in g.edges
        if edge.source in included and edge.target in included and evaluate(edge.pc, cfg)
    )
    return ProjectedGraph(included, edges, cfg)


def to_document(g: VariationalCallGraph) -> GraphDocument:
    """Convert a graph to its JSON document model."""
    return GraphDocument(
        nodes=[
            GraphNodeSchema(
                id=node.id,
                name=node.name,
                file=node.file,
                pc=render(node.pc),
                size_loc=node.size_loc,
                internal_ifdefs=node.internal_ifdef_count,
                internal_options=node.internal_option_count,
                begin_line=node.begin_line,
                end_line=node.end_line,
            )
            for node in sorted(g.nodes.values(), key=lambda n: n.id)
        ],
        edges=[
            GraphEdgeSchema(source=edge.source, target=edge.target, pc=render(edge.pc), weight=edge.weight)
            for edge in sorted(g.edges, key=lambda e: (e.source, e.target))
        ],
        unresolved=[
            UnresolvedCallSchema(caller=u.caller, callee=u.callee, line=u.line)
            for u in sorted(g.unresolved_calls, key=lambda u: (u.caller, u.line, u.callee))
        ],
    )


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export(g: VariationalCallGraph, fmt: str = "json") -> str:
    """Serialize a graph deterministically as ``json`` or ``dot``."""
    if fmt == "json":
        return json.dumps(to_document(g).model_dump(by_alias=True), indent=2) + "\n"
    if fmt == "dot":
        lines = ["digraph vcg {"]
        for node in sorted(g.nodes.values(), key=lambda n: n.id):
            lines.append(f"  {_dot_quote(node.id)} [label={_dot_quote(node.name)}, pc={_dot_quote(render(node.pc))}];")
        for edge in sorted(g.edges, key=lambda e: (e.source, e.target)):
            label = f"{render(edge.pc)} [w={edge.weight}]"
            lines.append(f"  {_dot_quote(edge.source)} -> {_dot_quote(edge.target)} [label={_dot_quote(label)}];")
        lines.append("}")
        return "\n".join(lines) + "\n"
    raise InputError(f"unknown export format {fmt!r}; expected one of {', '.join(EXPORT_FORMATS)}")


def import_json(text: str) -> VariationalCallGraph:
    """Load a graph from JSON, enforcing every graph invariant.

    Raises:
        GraphValidationError: Naming the offending element.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise GraphValidationError(f"invalid JSON: {e.msg}", f"line {e.lineno}")
    try:
        document = GraphDocument.model_validate(data)
    except ValidationError as e:
        error = e.errors()[0]
        raise GraphValidationError(error["msg"], ".".join(str(part) for part in error["loc"]) or None)

    nodes: Dict[str, VCGNode] = {}
    for index, item in enumerate(document.nodes):
        element = f"nodes[{index}] {item.id}"
        if item.id in nodes:
            raise GraphValidationError("duplicate node id", element)
        pc = parse_pc(item.pc)
        if not is_satisfiable(pc):
            raise GraphValidationError("unsatisfiable presence condition", element)
        nodes[item.id] = VCGNode(
            id=item.id,
            name=item.name,
            file=item.file,
            pc=pc,
            size_loc=item.size_loc,
            internal_ifdef_count=item.internal_ifdefs,
            internal_option_count=item.internal_options,
            begin_line=item.begin_line,
            end_line=item.end_line,
        )

    edges: Dict[Tuple[str, str], VCGEdge] = {}
    for index, item in enumerate(document.edges):
        element = f"edges[{index}] {item.source}->{item.target}"
        for endpoint in (item.source, item.target):
            if endpoint not in nodes:
                raise GraphValidationError(f"unknown node reference {endpoint}", element)
        if (item.source, item.target) in edges:
            raise GraphValidationError("duplicate edge", element)
        pc = parse_pc(item.pc)
        if not is_satisfiable(pc):
            raise GraphValidationError("unsatisfiable presence condition", element)
        if item.weight != edge_weight(pc):
            raise GraphValidationError(f"weight {item.weight} inconsistent with pc (expected {edge_weight(pc)})", element)
        edges[(item.source, item.target)] = VCGEdge(item.source, item.target, pc, item.weight)

    unresolved: List[UnresolvedCall] = []
    for index, item in enumerate(document.unresolved):
        if item.caller not in nodes:
            raise GraphValidationError(f"unknown node reference {item.caller}", f"unresolved[{index}]")
        unresolved.append(UnresolvedCall(item.caller, item.callee, item.line))

    return VariationalCallGraph(
        dict(sorted(nodes.items())),
        [edges[key] for key in sorted(edges)],
        sorted(unresolved, key=lambda u: (u.caller, u.line, u.callee)),
    )
