"""Command-line entry points: plan, generate, docs, eval, serve, inspect."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import documenter, evaluation
from .analysis.metrics import build_structure_graph, structure_objective
from .analysis.parsing import dump, parse
from .analysis.tokens import tokenize
from .errors import ForgeError
from .gateway import (
    ENV_BASE_URL,
    ENV_MODEL,
    ProviderGateway,
    ProviderProfile,
    RetryPolicy,
    ScriptedBehavior,
)
from .generator import load_tree_from_dir
from .pipeline import EngineConfig, JobRunner, run_pipeline
from .planner import persist_plan

DEFAULT_BASE_URLS = {
    "openai_compatible": "https://api.openai.com/v1",
    "gemini_style": "https://generativelanguage.googleapis.com/v1beta",
    "local_host": "http://localhost:11434",
}

PROVIDER_ALIASES = {
    "openai": "openai_compatible",
    "groq": "openai_compatible",
    "gemini": "gemini_style",
    "ollama": "local_host",
    "scripted": "scripted",
}


def build_profile(args: argparse.Namespace) -> ProviderProfile:
    kind = PROVIDER_ALIASES.get(args.provider, args.provider)
    if kind == "scripted":
        if not args.script:
            raise SystemExit("--provider scripted requires --script FILE")
        payload = json.loads(Path(args.script).read_text(encoding="utf-8"))
        script = ScriptedBehavior(
            responses=payload.get("responses", []),
            failure_mask=payload.get("failure_mask", []),
            per_call_success_p=payload.get("per_call_success_p"),
            seed=payload.get("seed"),
        )
        return ProviderProfile(kind="scripted", script=script,
                               default_model=args.model or "scripted")
    base_url = os.environ.get(ENV_BASE_URL) or DEFAULT_BASE_URLS[kind]
    model = args.model or os.environ.get(ENV_MODEL, "")
    if not model:
        raise SystemExit("no model configured; pass --model or set FORGE_MODEL")
    return ProviderProfile(kind=kind, base_url=base_url, default_model=model)


def build_config(args: argparse.Namespace) -> EngineConfig:
    profile = build_profile(args)
    return EngineConfig(
        profiles={"default": profile},
        default_profile="default",
        retry_policy=RetryPolicy(),
        refine_iterations=args.iterations,
        fallback_enabled=not getattr(args, "no_fallback", False),
        use_context=not getattr(args, "no_context", False),
        workspace_root=Path(getattr(args, "out", None) or "workspace"),
    )


def add_provider_options(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--provider", default="openai",
                     help="openai|groq|gemini|ollama|scripted (default: openai)")
    cmd.add_argument("--model", default=None, help="model id (or set FORGE_MODEL)")
    cmd.add_argument("--script", default=None,
                     help="JSON file of scripted responses (scripted provider)")
    cmd.add_argument("--iterations", type=int, default=3,
                     help="description refinement iterations (default: 3)")


def add_plan_inputs(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--name", required=True, help="package name [a-z][a-z0-9_]*")
    cmd.add_argument("--description", required=True, help="what the package should do")
    cmd.add_argument("--feature", action="append", default=[], dest="features",
                     help="feature description (repeatable)")


def cmd_plan(args: argparse.Namespace) -> int:
    config = build_config(args)
    runner = JobRunner(config)
    runner.start(args.name, args.description, args.features)
    runner.propose()
    job = runner.job
    print(f"workspace: {job.workspace}")
    print(f"plan: {job.workspace / 'plan.json'}")
    print("proposed files:")
    for path in job.proposed_files:
        print(f"  {path}")
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    config = build_config(args)

    def confirm(files: list[str]) -> bool:
        print("proposed files:")
        for path in files:
            print(f"  {path}")
        answer = input("create these files? [y/N] ").strip().lower()
        return answer in ("y", "yes")

    result = run_pipeline(
        config,
        args.name,
        args.description,
        args.features,
        non_interactive=args.non_interactive,
        confirm=None if args.non_interactive else confirm,
    )
    if args.zip:
        data = result.zip_path.read_bytes()
        Path(args.zip).write_bytes(data)
        print(f"zip copied to {args.zip}")
    print(f"workspace: {result.workspace}")
    print(f"zip: {result.zip_path}")
    print(f"documentation: {result.doc_path}")
    print(f"report: {result.report_path}")
    composite = result.report["codebleu"]["codebleu"]
    print(f"codebleu vs scaffold: {composite:.4f}")
    return 0


def cmd_docs(args: argparse.Namespace) -> int:
    tree = load_tree_from_dir(args.package)
    if not any(p.endswith(".py") for p in tree.entries):
        raise SystemExit(f"no Python files found under {args.package}")
    api = documenter.extract_api(tree)
    relationships = documenter.extract_relationships(tree)
    examples = documenter.embedded_examples(tree)
    if examples is None:
        if args.provider == "scripted" or args.model or os.environ.get(ENV_MODEL):
            profile = build_profile(args)
            examples = documenter.synthesize_examples(
                ProviderGateway(), profile, RetryPolicy(), api, tree,
                package_name=args.name,
            )
        else:
            examples = documenter.STUB_USAGE

    class _NamedPlan:
        package_name = args.name
        features = []

    bundle = documenter.build_documentation(tree, _NamedPlan(), api, relationships, examples)
    out = Path(args.out or args.package)
    path = documenter.write_documentation(bundle, out)
    findings = documenter.validate_markdown(path.read_text(encoding="utf-8"), tree)
    print(f"documentation: {path}")
    for finding in findings:
        print(f"  lint {finding.rule} line {finding.line}: {finding.detail}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    candidate = load_tree_from_dir(args.candidate)
    reference = load_tree_from_dir(args.reference)
    report = evaluation.codebleu_package(candidate.entries, reference.entries)

    docs_report = None
    doc_path = Path(args.candidate) / "DOCUMENTATION.md"
    if doc_path.is_file():
        bundle = documenter.bundle_from_markdown(doc_path.read_text(encoding="utf-8"))
        docs_report = evaluation.doc_metrics(bundle)

    graph = build_structure_graph(candidate.entries)
    payload = {
        "codebleu": report.as_dict(),
        "docs": docs_report.as_dict() if docs_report else None,
        "structure": {
            "objective": structure_objective(graph),
            "lambda": graph.coupling_lambda,
        },
    }
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        rows = [
            ("ngram match", report.ngram),
            ("weighted ngram match", report.weighted_ngram),
            ("syntax match", report.syntax),
            ("dataflow match", report.dataflow),
            ("token match", report.token_match),
            ("identifier match", report.identifier_match),
            ("codebleu", report.composite),
        ]
        width = max(len(label) for label, _ in rows)
        for label, value in rows:
            print(f"{label.ljust(width)}  {value:.4f}")
        if docs_report:
            print(f"{'flesch'.ljust(width)}  {docs_report.flesch:.2f}")
            print(f"{'mean coherence'.ljust(width)}  {docs_report.mean_coherence:.4f}")
        print(f"{'structure objective'.ljust(width)}  {structure_objective(graph):.4f}")
    if args.min_composite is not None and report.composite < args.min_composite:
        print(
            f"codebleu {report.composite:.4f} below threshold {args.min_composite}",
            file=sys.stderr,
        )
        return 1
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import serve

    config = build_config(args)
    static_dir = args.studio if args.studio and Path(args.studio).is_dir() else None
    serve(config, port=args.port, static_dir=static_dir)
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    source = Path(args.file).read_text(encoding="utf-8")
    if args.tokens or not args.tree:
        stream = tokenize(source)
        for tok in stream.tokens:
            print(f"{tok.line:4d}:{tok.col:<3d} {tok.kind:12s} {tok.text!r}")
        for diag in stream.diagnostics:
            print(f"diagnostic: {diag}")
    if args.tree:
        print(dump(parse(source).root))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="forge",
        description="Generate, document, and evaluate Python packages from a description.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="enhance the plan and persist plan.json")
    add_plan_inputs(plan)
    add_provider_options(plan)
    plan.add_argument("--out", default=None, help="workspace root (default: workspace)")
    plan.set_defaults(func=cmd_plan)

    gen = sub.add_parser("generate", help="run the full pipeline")
    add_plan_inputs(gen)
    add_provider_options(gen)
    gen.add_argument("--out", default=None, help="workspace root (default: workspace)")
    gen.add_argument("--zip", default=None, help="copy the exported zip here")
    gen.add_argument("--no-context", action="store_true", dest="no_context",
                     help="prompt with enhanced descriptions instead of the context prompt")
    gen.add_argument("--no-fallback", action="store_true", dest="no_fallback",
                     help="disable the fallback scaffold merge")
    gen.add_argument("--non-interactive", action="store_true",
                     help="skip the confirmation prompt")
    gen.set_defaults(func=cmd_generate)

    docs = sub.add_parser("docs", help="document an existing package directory")
    docs.add_argument("--package", required=True, help="package directory to document")
    docs.add_argument("--name", required=True, help="package name for headings")
    docs.add_argument("--out", default=None, help="output directory (default: package dir)")
    add_provider_options(docs)
    docs.set_defaults(func=cmd_docs)

    ev = sub.add_parser("eval", help="score a candidate package against a reference")
    ev.add_argument("--candidate", required=True)
    ev.add_argument("--reference", required=True)
    ev.add_argument("--json", action="store_true", help="emit the JSON report")
    ev.add_argument("--min-composite", type=float, default=None,
                    help="exit non-zero when the composite falls below this")
    ev.set_defaults(func=cmd_eval)

    srv = sub.add_parser("serve", help="run the studio HTTP API")
    add_provider_options(srv)
    srv.add_argument("--port", type=int, default=8321)
    srv.add_argument("--out", default=None, help="workspace root (default: workspace)")
    srv.add_argument("--studio", default=None, help="directory of built studio assets to serve")
    srv.set_defaults(func=cmd_serve)

    ins = sub.add_parser("inspect", help="dump token streams and syntax trees")
    ins.add_argument("file")
    ins.add_argument("--tokens", action="store_true")
    ins.add_argument("--tree", action="store_true")
    ins.set_defaults(func=cmd_inspect)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ForgeError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
