"""forge: turn a package description into a generated, documented, evaluated
Python package via hosted or local language models."""

from .errors import (
    AuthMissing,
    EmptyGeneration,
    ExhaustedRetries,
    ForgeError,
    InvalidFeatureName,
    MalformedJudgeOutput,
    MalformedResponse,
    MissingEnhancement,
)
from .gateway import (
    ChatMessage,
    CompletionRequest,
    CompletionResult,
    ProviderGateway,
    ProviderProfile,
    RetryPolicy,
    ScriptedBehavior,
    apply_temperature,
    backoff_wait,
    retry_success_probability,
)
from .generator import (
    FallbackTemplate,
    PackageTree,
    create_fallback_structure,
    export_zip,
    generate_package,
    materialize,
    parse_content,
    render_tree,
)
from .planner import (
    FeatureSpec,
    PackagePlan,
    QualityScore,
    build_context_prompt,
    enhance_feature,
    load_plan,
    parse_quality_score,
    persist_plan,
    refine_description,
)
from .pipeline import EngineConfig, Job, JobRunner, PipelineResult, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "AuthMissing",
    "ChatMessage",
    "CompletionRequest",
    "CompletionResult",
    "EmptyGeneration",
    "EngineConfig",
    "ExhaustedRetries",
    "FallbackTemplate",
    "FeatureSpec",
    "ForgeError",
    "InvalidFeatureName",
    "Job",
    "JobRunner",
    "MalformedJudgeOutput",
    "MalformedResponse",
    "MissingEnhancement",
    "PackagePlan",
    "PackageTree",
    "PipelineResult",
    "ProviderGateway",
    "ProviderProfile",
    "QualityScore",
    "RetryPolicy",
    "ScriptedBehavior",
    "apply_temperature",
    "backoff_wait",
    "build_context_prompt",
    "create_fallback_structure",
    "enhance_feature",
    "export_zip",
    "generate_package",
    "load_plan",
    "materialize",
    "parse_content",
    "parse_quality_score",
    "persist_plan",
    "refine_description",
    "render_tree",
    "retry_success_probability",
    "run_pipeline",
]
