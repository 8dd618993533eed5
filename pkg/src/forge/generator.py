"""Package generation: wire-format parsing, fallback scaffold, export.

The model emits files in a line-oriented wire format:

    ### FILE: relative/path.py
    ```
    <content>
    ```

parse_content is total: every anomaly (stray lines, duplicate paths,
unterminated fences, invalid paths) becomes a ParseEvent, never an
exception.  Nested triple-backtick fences cannot be represented; the
generation prompt forbids them and the close-on-fence rule is the
documented limitation.
"""

from __future__ import annotations

import io
import re
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyGeneration, InvalidFeatureName

FILE_HEADER_PREFIX = "### FILE: "
_SEGMENT_RE = re.compile(r"^[a-z_][a-z0-9_]*$")


def valid_tree_path(path: str) -> bool:
    if not path or path.startswith("/") or "\\" in path:
        return False
    segments = path.split("/")
    return all(seg not in ("", ".", "..") for seg in segments)


class PackageTree:
    """Ordered map of relative file path to text content."""

    def __init__(self, entries: dict[str, str] | None = None):
        self.entries: dict[str, str] = {}
        if entries:
            for path, content in entries.items():
                self.put(path, content)

    def put(self, path: str, content: str) -> None:
        if not valid_tree_path(path):
            raise ValueError(f"invalid tree path: {path!r}")
        if not isinstance(content, str):
            raise TypeError("tree contents must be text")
        self.entries[path] = content

    def paths(self) -> list[str]:
        return list(self.entries)

    def __contains__(self, path: str) -> bool:
        return path in self.entries

    def __getitem__(self, path: str) -> str:
        return self.entries[path]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __eq__(self, other) -> bool:
        if isinstance(other, PackageTree):
            return self.entries == other.entries
        return NotImplemented

    def __repr__(self) -> str:
        return f"PackageTree({len(self.entries)} entries)"

    def copy(self) -> "PackageTree":
        return PackageTree(dict(self.entries))


@dataclass(frozen=True)
class ParseEvent:
    kind: str  # file_opened | file_closed | duplicate_path_overwritten
    #          | unterminated_fence_flushed | stray_line_skipped
    line_number: int
    path: str | None = None


@dataclass
class ParseResult:
    tree: PackageTree
    events: list[ParseEvent]

    @property
    def anomalies(self) -> list[ParseEvent]:
        informational = ("file_opened", "file_closed")
        return [e for e in self.events if e.kind not in informational]


def parse_content(response: str) -> ParseResult:
    """Three-state machine over lines: expect_file -> expect_open -> collecting."""
    tree = PackageTree()
    events: list[ParseEvent] = []
    state = "expect_file"
    current_path: str | None = None
    collected: list[str] = []
    open_line = 0

    def close_file(line_number: int, terminated: bool) -> None:
        nonlocal current_path, collected
        content = "\n".join(collected)
        if current_path in tree:
            events.append(
                ParseEvent("duplicate_path_overwritten", line_number, current_path)
            )
        tree.put(current_path, content)
        kind = "file_closed" if terminated else "unterminated_fence_flushed"
        events.append(ParseEvent(kind, line_number, current_path))
        current_path = None
        collected = []

    lines = response.split("\n") if response else []
    line_number = 0
    for raw in lines:
        line_number += 1
        if state == "expect_file":
            if raw.startswith(FILE_HEADER_PREFIX):
                path = raw[len(FILE_HEADER_PREFIX) :].strip()
                if valid_tree_path(path):
                    current_path = path
                    state = "expect_open"
                    events.append(ParseEvent("file_opened", line_number, path))
                else:
                    events.append(ParseEvent("stray_line_skipped", line_number, path or None))
            elif raw.strip():
                events.append(ParseEvent("stray_line_skipped", line_number))
        elif state == "expect_open":
            if raw[:3] == "```":
                state = "collecting"
                open_line = line_number
            else:
                events.append(ParseEvent("stray_line_skipped", line_number, current_path))
                current_path = None
                state = "expect_file"
        else:  # collecting
            if raw[:3] == "```":
                close_file(line_number, terminated=True)
                state = "expect_file"
            else:
                collected.append(raw)

    if state == "collecting":
        close_file(line_number, terminated=False)
    return ParseResult(tree=tree, events=events)


def render_tree(tree: PackageTree) -> str:
    """Serializer inverse to parse_content; entries in path-sorted order."""
    parts = []
    for path in sorted(tree.entries):
        parts.append(f"{FILE_HEADER_PREFIX}{path}\n```\n{tree.entries[path]}\n```\n")
    return "".join(parts)


# ---------------------------------------------------------------------------
# Fallback scaffold


@dataclass(frozen=True)
class FallbackTemplate:
    package_name: str
    features: tuple[str, ...] = ()

    def __post_init__(self):
        if not _SEGMENT_RE.match(self.package_name):
            raise ValueError(f"invalid package name: {self.package_name!r}")
        if any(not f for f in self.features):
            raise ValueError("feature names must be non-empty")


def feature_slug(feature: str) -> str:
    slug = feature.lower().replace(" ", "_")
    if not _SEGMENT_RE.match(slug):
        raise InvalidFeatureName(
            f"feature {feature!r} does not reduce to a valid module name"
        )
    return slug


def base_file_paths(package_name: str) -> list[str]:
    return [
        f"{package_name}/__init__.py",
        f"{package_name}/main.py",
        "setup.py",
        "README.md",
        "requirements.txt",
        f"tests/test_{package_name}.py",
    ]


def create_fallback_structure(template: FallbackTemplate) -> PackageTree:
    """Base files plus one module, example, and test per feature."""
    name = template.package_name
    slugs = [feature_slug(f) for f in template.features]
    keywords = ", ".join(repr(f) for f in template.features)

    tree = PackageTree()
    tree.put(
        f"{name}/__init__.py",
        f'"""{name}: generated package scaffold."""\n\n__version__ = "0.1.0"\n',
    )
    tree.put(
        f"{name}/main.py",
        (
            f'"""Entry point for {name}."""\n\n\n'
            "def main():\n"
            f'    """Run the {name} package."""\n'
            f'    print("{name} is ready")\n\n\n'
            'if __name__ == "__main__":\n'
            "    main()\n"
        ),
    )
    tree.put(
        "setup.py",
        (
            "from setuptools import setup, find_packages\n\n"
            "setup(\n"
            f'    name="{name}",\n'
            '    version="0.1.0",\n'
            f'    description="{name}: ' + ("implements " + ", ".join(template.features) if template.features else "a generated Python package") + '",\n'
            f"    keywords=[{keywords}],\n"
            "    packages=find_packages(),\n"
            ")\n"
        ),
    )
    tree.put(
        "README.md",
        (
            f"# {name}\n\n"
            f"{name} is a generated Python package"
            + (" providing " + ", ".join(template.features) if template.features else "")
            + ".\n"
        ),
    )
    tree.put("requirements.txt", "# add runtime dependencies here\n")
    tree.put(
        f"tests/test_{name}.py",
        (
            f"import {name}\n\n\n"
            "def test_version():\n"
            f'    assert {name}.__version__\n'
        ),
    )

    for feature, slug in zip(template.features, slugs):
        tree.put(
            f"{name}/{slug}.py",
            (
                f'"""{feature} support for {name}."""\n\n\n'
                f"def run_{slug}():\n"
                f'    """TODO: implement {feature}."""\n'
                f'    raise NotImplementedError("{slug} is a stub")\n'
            ),
        )
        tree.put(
            f"examples/example_{slug}.py",
            (
                f'"""Example usage of the {feature} feature."""\n\n'
                f"from {name}.{slug} import run_{slug}\n\n"
                f"run_{slug}()\n"
            ),
        )
        tree.put(
            f"tests/test_{slug}.py",
            (
                f"from {name}.{slug} import run_{slug}\n\n\n"
                f"def test_{slug}_is_stub():\n"
                "    try:\n"
                f"        run_{slug}()\n"
                "    except NotImplementedError:\n"
                "        pass\n"
            ),
        )
    return tree


# ---------------------------------------------------------------------------
# Model-backed generation


@dataclass
class GenerationResult:
    tree: PackageTree
    used_fallback: bool
    events: list[ParseEvent]


def generate_package(
    gateway,
    profile,
    policy,
    plan,
    use_context: bool = True,
    fallback_enabled: bool = True,
) -> GenerationResult:
    """Prompt the model, parse its reply, and merge the fallback scaffold for
    any missing scaffold paths (generated files are never overwritten)."""
    from .gateway import ChatMessage, CompletionRequest
    from .prompts import render_prompt

    if use_context:
        if not plan.context_prompt:
            raise ValueError("use_context requires plan.context_prompt")
        description = plan.context_prompt
    else:
        description = plan.describe_for_generation()

    prompt = render_prompt(
        "generate_package",
        package_name=plan.package_name,
        description=description,
        file_list="\n".join(base_file_paths(plan.package_name)),
    )
    request = CompletionRequest(
        model_id=profile.default_model,
        messages=(ChatMessage("user", prompt),),
    )
    result = gateway.complete(profile, request, policy)
    parsed = parse_content(result.text)
    tree = parsed.tree

    if len(tree) == 0 and not fallback_enabled:
        raise EmptyGeneration("model reply contained no file blocks and fallback is disabled")

    used_fallback = False
    if fallback_enabled:
        missing_base = [
            p for p in base_file_paths(plan.package_name) if p not in tree
        ]
        if missing_base or len(tree) == 0:
            scaffold = create_fallback_structure(
                FallbackTemplate(plan.package_name, tuple(f.name for f in plan.features))
            )
            for path, content in scaffold.entries.items():
                if path not in tree:
                    tree.put(path, content)
            used_fallback = True

    return GenerationResult(tree=tree, used_fallback=used_fallback, events=parsed.events)


# ---------------------------------------------------------------------------
# Materialization and archive export


def materialize(tree: PackageTree, out_dir: str | Path, force: bool = False) -> list[Path]:
    out = Path(out_dir)
    if out.exists():
        if not out.is_dir():
            raise NotADirectoryError(f"{out} exists and is not a directory")
        if any(out.iterdir()) and not force:
            raise FileExistsError(f"refusing to write into non-empty directory {out}")
    out.mkdir(parents=True, exist_ok=True)
    root = out.resolve()
    written: list[Path] = []
    for path in tree.entries:
        target = (root / path).resolve()
        if not target.is_relative_to(root):
            raise ValueError(f"entry {path!r} escapes the output directory")
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(tree.entries[path], encoding="utf-8")
        written.append(target)
    return written


def export_zip(tree: PackageTree, zip_path: str | Path) -> int:
    """Deterministic archive: sorted paths, epoch timestamps, fixed attrs."""
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w", compression=zipfile.ZIP_DEFLATED) as archive:
        for path in sorted(tree.entries):
            info = zipfile.ZipInfo(filename=path, date_time=(1980, 1, 1, 0, 0, 0))
            info.create_system = 3
            info.external_attr = 0o644 << 16
            info.compress_type = zipfile.ZIP_DEFLATED
            archive.writestr(info, tree.entries[path].encode("utf-8"), compresslevel=9)
    data = buffer.getvalue()
    Path(zip_path).write_bytes(data)
    return len(data)


def load_tree_from_dir(root: str | Path) -> PackageTree:
    """Read a materialized package back into a tree (text files only)."""
    base = Path(root)
    tree = PackageTree()
    for file in sorted(base.rglob("*")):
        if not file.is_file():
            continue
        rel = file.relative_to(base).as_posix()
        try:
            tree.put(rel, file.read_text(encoding="utf-8"))
        except (UnicodeDecodeError, ValueError):
            continue
    return tree
