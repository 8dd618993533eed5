"""Per-module code metrics and the package structure objective.

The structure objective scores a module dependency graph as
sum of coupling weights + lambda * sum of node complexities; the engine
reports it as a comparison score between candidate trees, it does not
search over restructurings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .parsing import Node, SyntaxTree, parse
from .tokens import tokenize

_DECISION_KEYWORDS = frozenset({"if", "elif", "for", "while", "except", "and", "or"})


@dataclass(frozen=True)
class CodeMetrics:
    line_count: int
    comment_density: float
    cyclomatic_complexity: int


def code_metrics(source: str) -> CodeMetrics:
    """Non-blank line count, pure-comment-line density, and 1 + decision points."""
    lines = source.split("\n")
    non_blank = sum(1 for ln in lines if ln.strip())

    stream = tokenize(source)
    comment_lines = set()
    for tok in stream.tokens:
        if tok.kind != "comment":
            continue
        prefix = lines[tok.line - 1][: tok.col] if tok.line - 1 < len(lines) else ""
        if not prefix.strip():
            comment_lines.add(tok.line)

    decisions = sum(
        1
        for tok in stream.tokens
        if tok.kind == "keyword" and tok.text in _DECISION_KEYWORDS
    )
    density = len(comment_lines) / non_blank if non_blank else 0.0
    return CodeMetrics(
        line_count=non_blank,
        comment_density=density,
        cyclomatic_complexity=1 + decisions,
    )


@dataclass(frozen=True)
class ImportRecord:
    module: str          # dotted module text, "" for pure-relative imports
    names: tuple[str, ...]  # names pulled in by a from-import, () for plain import
    level: int = 0       # leading dots of a relative import


def collect_imports(tree: SyntaxTree) -> list[ImportRecord]:
    records: list[ImportRecord] = []
    for node in tree.root.walk():
        if node.kind == "import_stmt":
            for child in node.children:
                if child.kind == "dotted_name":
                    records.append(ImportRecord(_dotted_text(child), ()))
        elif node.kind == "from_import_stmt":
            level = sum(
                len(c.token.text)
                for c in node.children
                if c.is_leaf and c.token.text in (".", "...")
            )
            module = ""
            for child in node.children:
                if child.kind == "dotted_name":
                    module = _dotted_text(child)
                    break
            names = []
            for child in node.children:
                if child.kind == "import_name":
                    names.append(child.children[0].token.text)
            star = any(c.is_leaf and c.token.text == "*" for c in node.children)
            if star:
                names.append("*")
            records.append(ImportRecord(module, tuple(names), level))
    return records


def _dotted_text(node: Node) -> str:
    return "".join(tok.text for tok in node.leaves())


@dataclass
class StructureGraph:
    """Module dependency graph with complexities, coupling weights, and lambda."""

    complexities: dict[str, float] = field(default_factory=dict)
    edges: dict[tuple[str, str], float] = field(default_factory=dict)
    coupling_lambda: float = 0.5
    diagnostics: list[str] = field(default_factory=list)


def structure_objective(graph: StructureGraph) -> float:
    """sum_(u,v) w(u,v) + lambda * sum_v c(v), exactly as stated."""
    coupling = sum(graph.edges.values())
    complexity = sum(graph.complexities.values())
    return coupling + graph.coupling_lambda * complexity


def module_name_for_path(path: str) -> str | None:
    if not path.endswith(".py"):
        return None
    trimmed = path[: -len(".py")]
    if trimmed.endswith("/__init__"):
        trimmed = trimmed[: -len("/__init__")]
    return trimmed.replace("/", ".")


def resolve_import_target(record: ImportRecord, importer: str, modules: dict[str, str]) -> list[tuple[str, float]]:
    """Map one import record to (target module, weight) pairs within the tree.

    Weight counts imported names: a plain ``import m`` weighs 1; a
    ``from m import a, b`` weighs 1 per name resolved to m (or to m.a when
    m.a is itself a module).
    """
    out: list[tuple[str, float]] = []
    base = record.module
    if record.level:
        parts = importer.split(".")
        anchor = parts[: -record.level] if record.level <= len(parts) else []
        base = ".".join(anchor + ([record.module] if record.module else []))
        base = base.strip(".")
    if not record.names:
        if base in modules:
            out.append((base, 1.0))
        return out
    for name in record.names:
        if name == "*":
            if base in modules:
                out.append((base, 1.0))
            continue
        dotted = f"{base}.{name}" if base else name
        if dotted in modules:
            out.append((dotted, 1.0))
        elif base in modules:
            out.append((base, 1.0))
    return out


def build_structure_graph(entries: dict[str, str], coupling_lambda: float = 0.5) -> StructureGraph:
    """Graph over the tree's modules: w = imported-name counts, c = complexity."""
    modules: dict[str, str] = {}
    for path in entries:
        name = module_name_for_path(path)
        if name is not None:
            modules[name] = path

    graph = StructureGraph(coupling_lambda=coupling_lambda)
    for name, path in sorted(modules.items()):
        source = entries[path]
        graph.complexities[name] = float(code_metrics(source).cyclomatic_complexity)
        tree = parse(source)
        for record in collect_imports(tree):
            for target, weight in resolve_import_target(record, name, modules):
                if target == name:
                    continue
                key = (name, target)
                graph.edges[key] = graph.edges.get(key, 0.0) + weight

    _flag_cycles(graph)
    return graph


def _flag_cycles(graph: StructureGraph) -> None:
    adjacency: dict[str, list[str]] = {}
    for (u, v) in graph.edges:
        adjacency.setdefault(u, []).append(v)
    state: dict[str, int] = {}

    def visit(node: str, path: list[str]) -> None:
        state[node] = 1
        for nxt in adjacency.get(node, []):
            if state.get(nxt) == 1:
                cycle = " -> ".join(path + [node, nxt])
                graph.diagnostics.append(f"import cycle: {cycle}")
            elif state.get(nxt) is None:
                visit(nxt, path + [node])
        state[node] = 2

    for node in sorted(graph.complexities):
        if state.get(node) is None:
            visit(node, [])
