"""Documentation synthesis from a generated package tree.

Pulls API symbols and import relationships out of the source, prefers the
package's own examples/ files for the usage section (falling back to a model
call), assembles the canonical section sequence, and lints the rendered
Markdown for fence, heading, link, and whitespace problems.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from .analysis.metrics import collect_imports, module_name_for_path, resolve_import_target
from .analysis.parsing import Node, parse
from .generator import PackageTree

logger = logging.getLogger(__name__)

SECTION_ORDER = (
    "Overview",
    "Features",
    "Installation",
    "Usage",
    "API Reference",
    "Testing",
    "Dependencies",
    "Contributing",
    "License",
)

CONTRIBUTING_TEXT = (
    "Contributions are welcome. Open an issue describing the change, add tests "
    "for any new behavior, and submit a pull request."
)

LICENSE_TEXT = (
    "This package is released under the MIT License. You may use, copy, "
    "modify, and distribute it with attribution and without warranty."
)


@dataclass(frozen=True)
class ApiSymbol:
    kind: str  # class | function
    name: str
    signature: str
    docstring: str | None
    module_path: str
    line: int = 0


@dataclass(frozen=True)
class Section:
    title: str
    body: str


@dataclass
class DocBundle:
    sections: list[Section]
    source_package: str


@dataclass(frozen=True)
class Relationship:
    from_module: str
    to_module: str


@dataclass(frozen=True)
class LintFinding:
    rule: str  # unbalanced_fence | heading_jump | broken_relative_link | trailing_whitespace
    line: int
    detail: str


# ---------------------------------------------------------------------------
# API extraction


def _string_value(token_text: str) -> str:
    text = token_text
    while text and text[0].isalpha():
        text = text[1:]
    for quote in ('"""', "'''", '"', "'"):
        if text.startswith(quote) and text.endswith(quote) and len(text) >= 2 * len(quote):
            return text[len(quote) : -len(quote)]
    return text


def _block_docstring(block: Node) -> str | None:
    if not block.children or block.children[0].kind != "expr_stmt":
        return None
    inner = block.children[0].children[0]
    if inner.is_leaf and inner.token.kind == "string":
        return _string_value(inner.token.text)
    if inner.kind == "string_concat":
        return "".join(_string_value(t.text) for t in inner.leaves())
    return None


def _signature_of(def_node: Node, source: str, name: str) -> str:
    params = next((c for c in def_node.children if c.kind == "parameters"), None)
    if params is None:
        return f"{name}()"
    span = params.token_span()
    body = source[span[0] : span[1]] if span else ""
    return f"{name}({' '.join(body.split())})"


def _def_line(def_node: Node) -> int:
    leaves = def_node.leaves()
    return leaves[0].line if leaves else 0


def _symbols_in(node: Node, source: str, path: str, prefix: str = "") -> list[ApiSymbol]:
    out: list[ApiSymbol] = []
    for child in node.children:
        target = child
        if child.kind == "decorated":
            target = child.children[-1]
        if target.kind == "function_def":
            name = prefix + target.children[1].token.text
            block = next(c for c in target.children if c.kind == "block")
            out.append(
                ApiSymbol(
                    kind="function",
                    name=name,
                    signature=_signature_of(target, source, name),
                    docstring=_block_docstring(block),
                    module_path=path,
                    line=_def_line(target),
                )
            )
        elif target.kind == "class_def":
            name = prefix + target.children[1].token.text
            block = next(c for c in target.children if c.kind == "block")
            out.append(
                ApiSymbol(
                    kind="class",
                    name=name,
                    signature=name,
                    docstring=_block_docstring(block),
                    module_path=path,
                    line=_def_line(target),
                )
            )
            out.extend(_symbols_in(block, source, path, prefix=f"{name}."))
    return out


def extract_api(tree: PackageTree) -> list[ApiSymbol]:
    """Top-level and class-level defs from every .py entry, ordered by
    (path, line).  Files the parser cannot make sense of are skipped."""
    symbols: list[ApiSymbol] = []
    for path in sorted(tree.entries):
        if not path.endswith(".py"):
            continue
        source = tree.entries[path]
        try:
            syntax = parse(source)
        except Exception:  # the parser is total; this is belt and braces
            logger.warning("skipping unparseable file %s", path)
            continue
        if syntax.has_errors:
            logger.warning("parse recovered from errors in %s", path)
        symbols.extend(_symbols_in(syntax.root, source, path))
    return symbols


def extract_relationships(tree: PackageTree) -> list[Relationship]:
    """Intra-package import edges; external imports are excluded here."""
    modules = {
        name: path
        for path in tree.entries
        if (name := module_name_for_path(path)) is not None
    }
    edges: set[Relationship] = set()
    for name, path in modules.items():
        syntax = parse(tree.entries[path])
        for record in collect_imports(syntax):
            for target, _weight in resolve_import_target(record, name, modules):
                if target != name:
                    edges.add(Relationship(from_module=name, to_module=target))
    return sorted(edges, key=lambda e: (e.from_module, e.to_module))


# ---------------------------------------------------------------------------
# Usage examples

STUB_USAGE = (
    "Usage examples are not yet available for this package. "
    "See the API Reference below for the public entry points."
)


def embedded_examples(tree: PackageTree) -> str | None:
    """Markdown embedding of the package's own examples/ files, if any."""
    existing = [
        p for p in sorted(tree.entries) if p.startswith("examples/") and p.endswith(".py")
    ]
    if not existing:
        return None
    parts = []
    for path in existing:
        parts.append(f"Run `{path}`:")
        parts.append(f"```python\n{tree.entries[path].rstrip()}\n```")
    return "\n\n".join(parts)


def synthesize_examples(
    gateway,
    profile,
    policy,
    symbols: list[ApiSymbol],
    tree: PackageTree,
    package_name: str = "",
    max_retries: int = 1,
) -> str:
    """Usage walkthrough; existing examples/ files are embedded verbatim and
    skip the model entirely."""
    existing = embedded_examples(tree)
    if existing is not None:
        return existing

    if not symbols:
        raise ValueError("symbols must be non-empty when no examples/ files exist")

    from .gateway import ChatMessage, CompletionRequest
    from .planner import has_fenced_block
    from .prompts import render_prompt

    prompt = render_prompt(
        "usage_examples",
        package_name=package_name or symbols[0].module_path.split("/")[0],
        symbols="\n".join(f"- {s.signature}" for s in symbols),
    )
    request = CompletionRequest(
        model_id=profile.default_model,
        messages=(ChatMessage("user", prompt),),
    )
    for _ in range(max_retries + 1):
        reply = gateway.complete(profile, request, policy).text
        if has_fenced_block(reply):
            return reply
    return STUB_USAGE


# ---------------------------------------------------------------------------
# Section assembly

_SETUP_DESCRIPTION_RE = re.compile(r"description\s*=\s*(['\"])(.*?)\1", re.DOTALL)
_SETUP_KEYWORDS_RE = re.compile(r"keywords\s*=\s*\[([^\]]*)\]", re.DOTALL)
_QUOTED_RE = re.compile(r"(['\"])(.*?)\1")


def _readme_first_paragraph(readme: str) -> str | None:
    for paragraph in re.split(r"\n\s*\n", readme):
        text = paragraph.strip()
        if text and not text.startswith("#"):
            return " ".join(text.split())
    return None


def _features_body(tree: PackageTree, plan) -> str:
    lines: list[str] = []
    setup_src = tree.entries.get("setup.py")
    if setup_src:
        desc = _SETUP_DESCRIPTION_RE.search(setup_src)
        keywords = _SETUP_KEYWORDS_RE.search(setup_src)
        if desc:
            lines.append(desc.group(2).strip())
        if keywords:
            names = [m.group(2) for m in _QUOTED_RE.finditer(keywords.group(1))]
            if names:
                if lines:
                    lines.append("")
                lines.extend(f"- {n}" for n in names)
    if not lines and plan is not None and plan.features:
        lines.extend(f"- {f.name}" for f in plan.features)
    if not lines:
        lines.append("No feature metadata is available.")
    return "\n".join(lines)


def _api_reference_body(
    api: list[ApiSymbol], relationships: list[Relationship]
) -> str:
    if not api:
        return "No public classes or functions were found."
    parts: list[str] = []
    by_module: dict[str, list[ApiSymbol]] = {}
    for symbol in sorted(api, key=lambda s: (s.module_path, s.line)):
        by_module.setdefault(symbol.module_path, []).append(symbol)
    for module, symbols in sorted(by_module.items()):
        parts.append(f"### {module}")
        for symbol in symbols:
            summary = ""
            if symbol.docstring:
                summary = " - " + symbol.docstring.strip().splitlines()[0]
            parts.append(f"- {symbol.kind} `{symbol.signature}`{summary}")
        parts.append("")
    if relationships:
        parts.append("### Module dependencies")
        for edge in relationships:
            parts.append(f"- `{edge.from_module}` imports `{edge.to_module}`")
    return "\n".join(parts).strip()


def _dependencies_body(tree: PackageTree) -> str:
    requirements = tree.entries.get("requirements.txt", "")
    lines = [
        ln.strip()
        for ln in requirements.splitlines()
        if ln.strip() and not ln.strip().startswith("#")
    ]
    if not lines:
        return "No external dependencies are required."
    return "\n".join(f"- {ln}" for ln in lines)


def build_documentation(
    tree: PackageTree,
    plan,
    api: list[ApiSymbol],
    relationships: list[Relationship],
    examples: str,
) -> DocBundle:
    """Sections in the canonical order; Testing appears only when tests/ exists."""
    name = plan.package_name if plan is not None else "package"

    overview = None
    if "README.md" in tree:
        overview = _readme_first_paragraph(tree.entries["README.md"])
    if not overview:
        overview = f"{name} is a generated Python package."

    sections = [
        Section("Overview", overview),
        Section("Features", _features_body(tree, plan)),
        Section("Installation", f"```bash\npip install {name}\n```"),
        Section("Usage", examples.strip() or "No usage examples are available."),
        Section("API Reference", _api_reference_body(api, relationships)),
    ]
    if any(p.startswith("tests/") for p in tree.entries):
        sections.append(
            Section("Testing", "Run the test suite from the package root:\n\n```bash\npytest\n```")
        )
    sections.extend(
        [
            Section("Dependencies", _dependencies_body(tree)),
            Section("Contributing", CONTRIBUTING_TEXT),
            Section("License", LICENSE_TEXT),
        ]
    )
    return DocBundle(sections=sections, source_package=name)


# ---------------------------------------------------------------------------
# Rendering and validation


def render_documentation(bundle: DocBundle) -> str:
    parts = [f"# {bundle.source_package}"]
    for section in bundle.sections:
        parts.append(f"## {section.title}")
        parts.append(section.body.strip() if section.body.strip() else "(No content.)")
    return "\n\n".join(parts) + "\n"


def write_documentation(bundle: DocBundle, workspace: str | Path) -> Path:
    root = Path(workspace)
    root.mkdir(parents=True, exist_ok=True)
    path = root / "DOCUMENTATION.md"
    path.write_text(render_documentation(bundle), encoding="utf-8", newline="\n")
    return path


def bundle_from_markdown(text: str, package: str = "package") -> DocBundle:
    """Reconstruct sections from a rendered document (h2 headings delimit)."""
    sections: list[Section] = []
    title: str | None = None
    body: list[str] = []
    in_fence = False
    for line in text.split("\n"):
        if line[:3] == "```":
            in_fence = not in_fence
        if not in_fence and line.startswith("# ") and title is None and not sections:
            package = line[2:].strip() or package
            continue
        if not in_fence and line.startswith("## "):
            if title is not None:
                sections.append(Section(title, "\n".join(body).strip()))
            title = line[3:].strip()
            body = []
            continue
        if title is not None:
            body.append(line)
    if title is not None:
        sections.append(Section(title, "\n".join(body).strip()))
    return DocBundle(sections=sections, source_package=package)


_HEADING_RE = re.compile(r"^(#{1,6})\s")
_LINK_RE = re.compile(r"\[[^\]]*\]\(([^)\s]+)\)")
_EXTERNAL_LINK_RE = re.compile(r"^[a-z][a-z0-9+.-]*:|^#")


def validate_markdown(doc: str, tree: PackageTree | None = None) -> list[LintFinding]:
    """Fence balance, heading jumps >= 2, dead relative links, trailing blanks."""
    findings: list[LintFinding] = []
    in_fence = False
    last_fence_line = 0
    previous_level: int | None = None

    for number, line in enumerate(doc.split("\n"), start=1):
        if line[:3] == "```":
            in_fence = not in_fence
            last_fence_line = number
            continue
        if line != line.rstrip(" \t"):
            findings.append(
                LintFinding("trailing_whitespace", number, "line ends with whitespace")
            )
        if in_fence:
            continue
        heading = _HEADING_RE.match(line)
        if heading:
            level = len(heading.group(1))
            if previous_level is not None and level - previous_level >= 2:
                findings.append(
                    LintFinding(
                        "heading_jump",
                        number,
                        f"heading level jumps from {previous_level} to {level}",
                    )
                )
            previous_level = level
        if tree is not None:
            for match in _LINK_RE.finditer(line):
                target = match.group(1)
                if _EXTERNAL_LINK_RE.match(target):
                    continue
                clean = target.split("#", 1)[0]
                if clean.startswith("./"):
                    clean = clean[2:]
                if clean and clean not in tree:
                    findings.append(
                        LintFinding(
                            "broken_relative_link",
                            number,
                            f"link target {target!r} is not in the tree",
                        )
                    )

    if in_fence:
        findings.append(
            LintFinding("unbalanced_fence", last_fence_line, "unclosed code fence")
        )
    return sorted(findings, key=lambda f: (f.line, f.rule))
