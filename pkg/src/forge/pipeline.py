"""End-to-end job orchestration: plan, refine, confirm, generate, document,
evaluate, export.

A job walks the state sequence planning -> awaiting_refinement ->
awaiting_confirmation -> generating -> documenting -> done, with failed
reachable from any active state.  Generation happens while entering
awaiting_confirmation so the proposed file list can be reviewed; the confirm
step gates materialization of files on disk.
"""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from . import documenter, evaluation, planner
from .analysis.metrics import build_structure_graph, code_metrics, structure_objective
from .errors import ForgeError
from .gateway import ProviderGateway, ProviderProfile, RetryPolicy
from .generator import (
    FallbackTemplate,
    PackageTree,
    create_fallback_structure,
    export_zip,
    generate_package,
    materialize,
)
from .planner import FeatureSpec, PackagePlan

JOB_STATES = (
    "planning",
    "awaiting_refinement",
    "awaiting_confirmation",
    "generating",
    "documenting",
    "done",
    "failed",
)

TRANSITIONS: dict[str, tuple[str, ...]] = {
    "planning": ("awaiting_refinement", "failed"),
    "awaiting_refinement": ("awaiting_refinement", "awaiting_confirmation", "failed"),
    "awaiting_confirmation": ("generating", "failed"),
    "generating": ("documenting", "failed"),
    "documenting": ("done", "failed"),
    "done": (),
    "failed": (),
}


@dataclass(frozen=True)
class JobEvent:
    timestamp: float
    phase: str
    message: str


@dataclass
class Job:
    id: str
    state: str = "planning"
    plan: PackagePlan | None = None
    tree: PackageTree | None = None
    doc: documenter.DocBundle | None = None
    events: list[JobEvent] = field(default_factory=list)
    proposed_files: list[str] = field(default_factory=list)
    used_fallback: bool = False
    workspace: Path | None = None
    error: str | None = None

    def log(self, phase: str, message: str) -> None:
        self.events.append(JobEvent(time.time(), phase, message))

    def transition(self, new_state: str) -> None:
        if new_state not in TRANSITIONS[self.state]:
            raise InvalidTransition(
                f"cannot move job from {self.state!r} to {new_state!r}"
            )
        self.state = new_state
        self.log(new_state, f"entered {new_state}")


class InvalidTransition(ForgeError):
    pass


@dataclass
class EngineConfig:
    profiles: dict[str, ProviderProfile]
    default_profile: str
    retry_policy: RetryPolicy = field(default_factory=RetryPolicy)
    refine_iterations: int = 3
    fallback_enabled: bool = True
    use_context: bool = True
    workspace_root: Path = field(default_factory=lambda: Path("workspace"))
    coupling_lambda: float = 0.5

    def __post_init__(self):
        if not self.profiles:
            raise ValueError("config needs at least one provider profile")
        if self.default_profile not in self.profiles:
            raise ValueError(f"default profile {self.default_profile!r} is not configured")
        self.workspace_root = Path(self.workspace_root)

    @property
    def profile(self) -> ProviderProfile:
        return self.profiles[self.default_profile]


@dataclass
class PipelineResult:
    job: Job
    workspace: Path
    zip_path: Path | None
    doc_path: Path | None
    report_path: Path | None
    report: dict | None


class JobRunner:
    """Drives one job through its phases; the HTTP service calls the same
    steps the batch pipeline does."""

    def __init__(self, config: EngineConfig, gateway: ProviderGateway | None = None,
                 job_id: str | None = None):
        self.config = config
        self.gateway = gateway or ProviderGateway()
        self.job = Job(id=job_id or uuid.uuid4().hex[:12])
        self.job.workspace = config.workspace_root / self.job.id

    # -- phase steps ------------------------------------------------------

    def start(self, name: str, description: str, features: list[str]) -> Job:
        job = self.job
        job.log("planning", f"planning package {name!r}")
        try:
            plan = PackagePlan(
                package_name=name,
                raw_description=description,
                features=[FeatureSpec(f, f) for f in features],
            )
            plan.features = [
                planner.enhance_feature(
                    self.gateway, self.config.profile, self.config.retry_policy, f
                )
                for f in plan.features
            ]
            plan = planner.refine_description(
                self.gateway,
                self.config.profile,
                self.config.retry_policy,
                plan,
                iterations=self.config.refine_iterations,
            )
            job.plan = plan
            job.transition("awaiting_refinement")
            return job
        except Exception as err:
            self._fail(err)
            raise

    def refine(self, feedback: str) -> Job:
        """Fold user feedback into the description and re-run refinement."""
        job = self.job
        if job.state != "awaiting_refinement":
            raise InvalidTransition(f"cannot refine a job in state {job.state!r}")
        try:
            plan = job.plan
            current = plan.enhanced_description or plan.raw_description
            plan.enhanced_description = f"{current}\n\nUser feedback: {feedback}"
            job.plan = planner.refine_description(
                self.gateway,
                self.config.profile,
                self.config.retry_policy,
                plan,
                iterations=self.config.refine_iterations,
            )
            job.log("awaiting_refinement", "description re-refined with user feedback")
            return job
        except Exception as err:
            self._fail(err)
            raise

    def propose(self) -> Job:
        """Build the context prompt, persist the plan, and generate the tree;
        the job then waits for confirmation of the proposed file list."""
        job = self.job
        if job.state != "awaiting_refinement":
            raise InvalidTransition(f"cannot propose from state {job.state!r}")
        try:
            plan = job.plan
            if self.config.use_context:
                planner.build_context_prompt(plan)
            planner.persist_plan(plan, job.workspace)
            result = generate_package(
                self.gateway,
                self.config.profile,
                self.config.retry_policy,
                plan,
                use_context=self.config.use_context,
                fallback_enabled=self.config.fallback_enabled,
            )
            job.tree = result.tree
            job.used_fallback = result.used_fallback
            job.proposed_files = sorted(result.tree.paths())
            if result.used_fallback:
                job.log("awaiting_confirmation", "fallback scaffold merged for missing files")
            job.transition("awaiting_confirmation")
            return job
        except Exception as err:
            self._fail(err)
            raise

    def confirm(self) -> PipelineResult:
        """Materialize, document, evaluate, and archive the confirmed tree."""
        job = self.job
        if job.state != "awaiting_confirmation":
            raise InvalidTransition(f"cannot confirm a job in state {job.state!r}")
        try:
            job.transition("generating")
            package_dir = job.workspace / "package"
            materialize(job.tree, package_dir, force=True)
            job.log("generating", f"materialized {len(job.tree)} files")

            job.transition("documenting")
            api = documenter.extract_api(job.tree)
            relationships = documenter.extract_relationships(job.tree)
            examples = documenter.synthesize_examples(
                self.gateway,
                self.config.profile,
                self.config.retry_policy,
                api,
                job.tree,
                package_name=job.plan.package_name,
            )
            bundle = documenter.build_documentation(
                job.tree, job.plan, api, relationships, examples
            )
            job.doc = bundle
            doc_path = documenter.write_documentation(bundle, job.workspace)
            rendered = documenter.render_documentation(bundle)
            findings = documenter.validate_markdown(rendered, job.tree)
            job.log("documenting", f"documentation written with {len(findings)} lint findings")

            report = self._evaluate(job, bundle, findings)
            report_path = job.workspace / "report.json"
            report_path.write_text(
                json.dumps(report, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
            )

            zip_path = job.workspace / "package.zip"
            export_zip(job.tree, zip_path)
            job.log("documenting", "package archived")
            job.transition("done")
            return PipelineResult(
                job=job,
                workspace=job.workspace,
                zip_path=zip_path,
                doc_path=doc_path,
                report_path=report_path,
                report=report,
            )
        except Exception as err:
            self._fail(err)
            raise

    def _evaluate(self, job: Job, bundle, findings) -> dict:
        plan = job.plan
        scaffold = create_fallback_structure(
            FallbackTemplate(plan.package_name, tuple(f.name for f in plan.features))
        )
        codebleu = evaluation.codebleu_package(job.tree.entries, scaffold.entries)
        docs = evaluation.doc_metrics(bundle)
        graph = build_structure_graph(job.tree.entries, self.config.coupling_lambda)
        modules = {
            path: code_metrics(src).__dict__
            for path, src in job.tree.entries.items()
            if path.endswith(".py")
        }
        return {
            "codebleu": codebleu.as_dict(),
            "docs": docs.as_dict(),
            "structure": {
                "objective": structure_objective(graph),
                "lambda": graph.coupling_lambda,
                "complexities": graph.complexities,
                "edges": {f"{u} -> {v}": w for (u, v), w in sorted(graph.edges.items())},
                "diagnostics": graph.diagnostics,
            },
            "modules": modules,
            "used_fallback": job.used_fallback,
            "validation_findings": [
                {"rule": f.rule, "line": f.line, "detail": f.detail} for f in findings
            ],
        }

    def _fail(self, err: Exception) -> None:
        job = self.job
        job.error = f"{type(err).__name__}: {err}"
        job.log("failed", job.error)
        if job.state not in ("done", "failed"):
            job.state = "failed"


def run_pipeline(
    config: EngineConfig,
    name: str,
    description: str,
    features: list[str],
    non_interactive: bool = False,
    gateway: ProviderGateway | None = None,
    confirm=None,
) -> PipelineResult:
    """Full batch run.  In interactive mode ``confirm(proposed_files) -> bool``
    approves the file list; declining fails the job before any file is written."""
    runner = JobRunner(config, gateway=gateway)
    runner.start(name, description, features)
    runner.propose()
    if not non_interactive:
        approve = confirm if confirm is not None else (lambda files: True)
        if not approve(list(runner.job.proposed_files)):
            runner.job.log("failed", "confirmation declined; no files written")
            runner.job.state = "failed"
            raise ForgeError("confirmation declined")
    return runner.confirm()
