"""Plan building: feature enhancement, description refinement, context prompt.

Feature descriptions are rewritten by the model into prose plus pseudocode
(retrying on malformed replies).  The package description goes through a
judge-then-rewrite loop: each iteration scores the current description on
specificity, completeness, and technical accuracy, then rewrites it against
the judge's critique; the best-scoring iterate wins.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ExhaustedRetries, MalformedJudgeOutput, MissingEnhancement
from .gateway import ChatMessage, CompletionRequest
from .prompts import render_prompt

logger = logging.getLogger(__name__)

PACKAGE_NAME_RE = re.compile(r"^[a-z][a-z0-9_]*$")
FENCED_BLOCK_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)

# beyond this many features the enhanced plan tends to turn repetitive
FEATURE_COUNT_WARNING = 8


@dataclass(frozen=True)
class QualityScore:
    specificity: float
    completeness: float
    technical_accuracy: float
    overall: float

    def __post_init__(self):
        expected = (self.specificity + self.completeness + self.technical_accuracy) / 3
        if abs(self.overall - expected) > 1e-9:
            raise ValueError("overall must be the mean of the three criteria")

    @classmethod
    def from_criteria(
        cls, specificity: float, completeness: float, technical_accuracy: float
    ) -> "QualityScore":
        clamp = lambda v: min(10.0, max(0.0, float(v)))
        s, c, t = clamp(specificity), clamp(completeness), clamp(technical_accuracy)
        return cls(s, c, t, (s + c + t) / 3)

    def as_dict(self) -> dict:
        return {
            "specificity": self.specificity,
            "completeness": self.completeness,
            "technical_accuracy": self.technical_accuracy,
            "overall": self.overall,
        }


@dataclass
class FeatureSpec:
    name: str
    raw_description: str
    enhanced_description: str | None = None
    quality_history: list[QualityScore] = field(default_factory=list)

    def __post_init__(self):
        if not self.name:
            raise ValueError("feature name must be non-empty")


@dataclass
class PackagePlan:
    package_name: str
    raw_description: str
    enhanced_description: str | None = None
    features: list[FeatureSpec] = field(default_factory=list)
    context_prompt: str | None = None
    code_template: str | None = None
    description_quality_history: list[QualityScore] = field(default_factory=list)

    def __post_init__(self):
        if not PACKAGE_NAME_RE.match(self.package_name):
            raise ValueError(
                f"package name {self.package_name!r} must match [a-z][a-z0-9_]*"
            )
        if len(self.features) > FEATURE_COUNT_WARNING:
            logger.warning(
                "plan for %s lists %d features; enhancement tends to get verbose "
                "beyond %d",
                self.package_name,
                len(self.features),
                FEATURE_COUNT_WARNING,
            )

    def describe_for_generation(self) -> str:
        """Enhanced descriptions concatenated, for prompting without a context prompt."""
        parts = [self.enhanced_description or self.raw_description]
        for feature in self.features:
            parts.append(f"Feature: {feature.name}")
            parts.append(feature.enhanced_description or feature.raw_description)
        return "\n\n".join(parts)


# ---------------------------------------------------------------------------
# Judge output parsing


def extract_json_block(text: str) -> dict:
    """First fenced block that parses as a JSON object."""
    for match in FENCED_BLOCK_RE.finditer(text):
        body = match.group(1)
        try:
            payload = json.loads(body)
        except json.JSONDecodeError:
            continue
        if isinstance(payload, dict):
            return payload
    raise MalformedJudgeOutput("no fenced JSON object found in reply")


def parse_quality_score(judge_text: str) -> QualityScore:
    payload = extract_json_block(judge_text)
    values = []
    for key in ("specificity", "completeness", "technical_accuracy"):
        if key not in payload:
            raise MalformedJudgeOutput(f"judge block missing {key!r}")
        value = payload[key]
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise MalformedJudgeOutput(f"judge field {key!r} is not numeric")
        values.append(value)
    return QualityScore.from_criteria(*values)


def render_quality_block(score: QualityScore) -> str:
    body = json.dumps(
        {
            "specificity": score.specificity,
            "completeness": score.completeness,
            "technical_accuracy": score.technical_accuracy,
        }
    )
    return f"```json\n{body}\n```"


def has_fenced_block(text: str) -> bool:
    return FENCED_BLOCK_RE.search(text) is not None


# ---------------------------------------------------------------------------
# Enhancement and refinement


def _ask(gateway, profile, policy, prompt: str) -> str:
    request = CompletionRequest(
        model_id=profile.default_model,
        messages=(ChatMessage("user", prompt),),
    )
    return gateway.complete(profile, request, policy).text


def enhance_feature(gateway, profile, policy, feature: FeatureSpec, max_retries: int = 2) -> FeatureSpec:
    """Produce prose plus at least one fenced pseudocode block for a feature."""
    if not feature.raw_description:
        raise ValueError("feature.raw_description must be non-empty")
    prompt = render_prompt(
        "enhance_feature",
        feature_name=feature.name,
        raw_description=feature.raw_description,
    )
    last_reply = ""
    for _ in range(max_retries + 1):
        reply = _ask(gateway, profile, policy, prompt)
        if reply.strip() and has_fenced_block(reply):
            return dataclasses.replace(feature, enhanced_description=reply)
        last_reply = reply
    raise ExhaustedRetries(
        f"no well-formed enhancement for {feature.name!r} after "
        f"{max_retries + 1} attempts (last reply {last_reply[:80]!r})"
    )


def refine_description(
    gateway,
    profile,
    policy,
    plan: PackagePlan,
    iterations: int = 3,
    keep_best: bool = True,
    rewrite_profile=None,
    judge_retries: int = 2,
) -> PackagePlan:
    """Judge-then-rewrite loop; keeps the iterate with the best overall score."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not plan.raw_description:
        raise ValueError("plan.raw_description must be non-empty")
    rewrite_profile = rewrite_profile or profile

    current = plan.enhanced_description or plan.raw_description
    candidates: list[str] = []
    history: list[QualityScore] = []

    for step in range(iterations):
        judge_prompt = render_prompt(
            "judge_description",
            package_name=plan.package_name,
            description=current,
        )
        score = None
        judge_text = ""
        last_error: MalformedJudgeOutput | None = None
        for _ in range(judge_retries + 1):
            judge_text = _ask(gateway, profile, policy, judge_prompt)
            try:
                score = parse_quality_score(judge_text)
                break
            except MalformedJudgeOutput as err:
                last_error = err
        if score is None:
            raise MalformedJudgeOutput(
                f"judge produced no parseable score after {judge_retries + 1} attempts"
            ) from last_error
        history.append(score)
        candidates.append(current)

        if step < iterations - 1:
            rewrite_prompt = render_prompt(
                "rewrite_description",
                package_name=plan.package_name,
                description=current,
                critique=judge_text,
            )
            current = _ask(gateway, rewrite_profile, policy, rewrite_prompt)

    if keep_best:
        best = max(range(len(history)), key=lambda i: history[i].overall)
        chosen = candidates[best]
    else:
        chosen = candidates[-1]

    refined = dataclasses.replace(plan)
    refined.features = list(plan.features)
    refined.enhanced_description = chosen
    refined.description_quality_history = list(plan.description_quality_history) + history
    return refined


# ---------------------------------------------------------------------------
# Context prompt and persistence


def build_context_prompt(plan: PackagePlan) -> str:
    """Deterministic concatenation: header, description, features, template."""
    if not plan.enhanced_description:
        raise MissingEnhancement("plan has no enhanced description")
    for feature in plan.features:
        if not feature.enhanced_description:
            raise MissingEnhancement(f"feature {feature.name!r} lacks an enhanced description")

    parts = [f"# Package: {plan.package_name}", plan.enhanced_description]
    for feature in plan.features:
        parts.append(f"## Feature: {feature.name}")
        parts.append(feature.enhanced_description)
    if plan.code_template is not None:
        parts.append("## Template")
        parts.append(plan.code_template)
    prompt = "\n\n".join(parts)
    plan.context_prompt = prompt
    return prompt


def plan_to_dict(plan: PackagePlan) -> dict:
    return {
        "package_name": plan.package_name,
        "raw_description": plan.raw_description,
        "enhanced_description": plan.enhanced_description,
        "features": [
            {
                "name": f.name,
                "raw_description": f.raw_description,
                "enhanced_description": f.enhanced_description,
                "quality_history": [q.as_dict() for q in f.quality_history],
            }
            for f in plan.features
        ],
        "context_prompt": plan.context_prompt,
        "code_template": plan.code_template,
        "description_quality_history": [
            q.as_dict() for q in plan.description_quality_history
        ],
    }


def plan_from_dict(payload: dict) -> PackagePlan:
    def scores(items) -> list[QualityScore]:
        return [
            QualityScore(
                q["specificity"], q["completeness"], q["technical_accuracy"], q["overall"]
            )
            for q in items
        ]

    return PackagePlan(
        package_name=payload["package_name"],
        raw_description=payload["raw_description"],
        enhanced_description=payload.get("enhanced_description"),
        features=[
            FeatureSpec(
                name=f["name"],
                raw_description=f["raw_description"],
                enhanced_description=f.get("enhanced_description"),
                quality_history=scores(f.get("quality_history", [])),
            )
            for f in payload.get("features", [])
        ],
        context_prompt=payload.get("context_prompt"),
        code_template=payload.get("code_template"),
        description_quality_history=scores(
            payload.get("description_quality_history", [])
        ),
    )


def persist_plan(plan: PackagePlan, workspace: str | Path) -> tuple[Path, Path]:
    """Write plan.json and context.txt; context.txt is empty when unset."""
    root = Path(workspace)
    root.mkdir(parents=True, exist_ok=True)
    json_path = root / "plan.json"
    text_path = root / "context.txt"
    json_path.write_text(
        json.dumps(plan_to_dict(plan), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    text_path.write_text(plan.context_prompt or "", encoding="utf-8")
    return json_path, text_path


def load_plan(json_path: str | Path) -> PackagePlan:
    payload = json.loads(Path(json_path).read_text(encoding="utf-8"))
    return plan_from_dict(payload)
