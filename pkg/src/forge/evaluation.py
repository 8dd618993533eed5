"""Scoring for generated packages and documentation.

Code similarity follows the CodeBLEU recipe: modified n-gram precision,
keyword-weighted n-gram precision, syntax subtree matching, and def-use
dataflow matching, combined by a weight vector that sums to one.  Token and
identifier F1 are reported alongside but stay outside the composite.
Documentation quality combines Flesch reading ease, per-section dispersion,
and term-frequency cosine similarities.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field

from .analysis.dataflow import DefUseGraph, def_use
from .analysis.parsing import SyntaxTree, parse_tokens
from .analysis.tokens import KEYWORDS, TokenStream, significant_tokens, tokenize
from .errors import MalformedJudgeOutput

DEFAULT_WEIGHTS = (0.25, 0.25, 0.25, 0.25)
DEFAULT_MAX_N = 4
DEFAULT_KEYWORD_WEIGHT = 5.0

REVIEW_RUBRICS: dict[str, tuple[str, ...]] = {
    "package": ("Structure", "Code Quality", "Testing", "Usability"),
    "documentation": ("Clarity", "Completeness", "Structure", "Readability"),
    "enhancement": ("Relevance", "Clarity", "Depth", "Usefulness"),
}

STOPWORDS = frozenset(
    """a an and are as at be but by for from has have if in into is it its of
    on or that the this to was were will with you your not no can""".split()
)


# ---------------------------------------------------------------------------
# CodeBLEU components


def _texts(stream: TokenStream) -> list[str]:
    return [t.text for t in significant_tokens(stream)]


def _ngram_counts(texts: list[str], n: int) -> Counter:
    return Counter(tuple(texts[i : i + n]) for i in range(len(texts) - n + 1))


def ngram_match(candidate: TokenStream, reference: TokenStream, max_n: int = DEFAULT_MAX_N) -> float:
    """BLEU-style modified precision over significant tokens, geometric mean
    over n = 1..max_n (orders the candidate can form), with brevity penalty."""
    return _bleu(_texts(candidate), _texts(reference), max_n, keyword_weight=1.0)


def weighted_ngram_match(
    candidate: TokenStream,
    reference: TokenStream,
    max_n: int = DEFAULT_MAX_N,
    keyword_weight: float = DEFAULT_KEYWORD_WEIGHT,
) -> float:
    """As ngram_match, but an n-gram whose first token is a keyword counts
    ``keyword_weight`` times."""
    if keyword_weight < 1:
        raise ValueError("keyword_weight must be >= 1")
    return _bleu(_texts(candidate), _texts(reference), max_n, keyword_weight)


def _gram_weight(gram: tuple[str, ...], keyword_weight: float) -> float:
    return keyword_weight if gram[0] in KEYWORDS else 1.0


def _bleu(cand: list[str], ref: list[str], max_n: int, keyword_weight: float) -> float:
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    if not cand:
        return 0.0
    precisions: list[float] = []
    for n in range(1, max_n + 1):
        cand_counts = _ngram_counts(cand, n)
        if not cand_counts:
            continue
        ref_counts = _ngram_counts(ref, n)
        num = 0.0
        den = 0.0
        for gram, count in cand_counts.items():
            w = _gram_weight(gram, keyword_weight)
            den += w * count
            num += w * min(count, ref_counts.get(gram, 0))
        precisions.append(num / den if den else 0.0)
    if not precisions or any(p == 0.0 for p in precisions):
        return 0.0
    log_mean = sum(math.log(p) for p in precisions) / len(precisions)
    bp = 1.0 if len(cand) >= len(ref) else math.exp(1 - len(ref) / len(cand))
    return bp * math.exp(log_mean)


def _subtree_signatures(tree: SyntaxTree) -> Counter:
    sigs: Counter = Counter()
    for node in tree.root.walk():
        if node.children:
            sigs[(node.kind, tuple(c.kind for c in node.children))] += 1
    return sigs


def syntax_match(candidate: SyntaxTree, reference: SyntaxTree) -> tuple[float, list[str]]:
    """Clipped fraction of the reference's internal-node production signatures
    found in the candidate.  Returns (score, diagnostics)."""
    ref_sigs = _subtree_signatures(reference)
    cand_sigs = _subtree_signatures(candidate)
    total = sum(ref_sigs.values())
    if total == 0:
        if sum(cand_sigs.values()) == 0:
            return 1.0, []
        return 0.0, ["reference syntax tree is trivial; candidate is not"]
    matched = sum(min(count, cand_sigs.get(sig, 0)) for sig, count in ref_sigs.items())
    return matched / total, []


def _normalized_edges(graph: DefUseGraph) -> Counter:
    return Counter((e.scope, e.def_index) for e in graph.edges)


def dataflow_match(candidate: DefUseGraph, reference: DefUseGraph) -> tuple[float, list[str]]:
    """Clipped fraction of reference def-use edges present in the candidate,
    names abstracted to def-order indices per scope."""
    ref_edges = _normalized_edges(reference)
    total = sum(ref_edges.values())
    if total == 0:
        if candidate.edges:
            return 1.0, ["reference has no def-use edges; score vacuous"]
        return 1.0, []
    cand_edges = _normalized_edges(candidate)
    matched = sum(min(count, cand_edges.get(edge, 0)) for edge, count in ref_edges.items())
    return matched / total, []


def _multiset_f1(cand: Counter, ref: Counter) -> float:
    if not cand and not ref:
        return 1.0
    if not cand or not ref:
        return 0.0
    overlap = sum(min(count, ref.get(item, 0)) for item, count in cand.items())
    precision = overlap / sum(cand.values())
    recall = overlap / sum(ref.values())
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def token_and_identifier_match(
    candidate: TokenStream, reference: TokenStream
) -> tuple[float, float]:
    cand_all = Counter(_texts(candidate))
    ref_all = Counter(_texts(reference))
    token_match = _multiset_f1(cand_all, ref_all)
    cand_ids = Counter(t.text for t in significant_tokens(candidate) if t.kind == "identifier")
    ref_ids = Counter(t.text for t in significant_tokens(reference) if t.kind == "identifier")
    identifier_match = _multiset_f1(cand_ids, ref_ids)
    return token_match, identifier_match


@dataclass(frozen=True)
class CodeBleuReport:
    ngram: float
    weighted_ngram: float
    syntax: float
    dataflow: float
    token_match: float
    identifier_match: float
    weights: tuple[float, float, float, float]
    composite: float
    diagnostics: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "ngram_match": self.ngram,
            "weighted_ngram_match": self.weighted_ngram,
            "syntax_match": self.syntax,
            "dataflow_match": self.dataflow,
            "token_match": self.token_match,
            "identifier_match": self.identifier_match,
            "weights": list(self.weights),
            "codebleu": self.composite,
            "diagnostics": list(self.diagnostics),
        }


def _assemble(
    ngram: float,
    weighted: float,
    syntax: float,
    dataflow: float,
    token_match: float,
    identifier_match: float,
    weights: tuple[float, float, float, float],
    diagnostics: tuple[str, ...],
) -> CodeBleuReport:
    alpha, beta, gamma, delta = weights
    composite = alpha * ngram + beta * weighted + gamma * syntax + delta * dataflow
    return CodeBleuReport(
        ngram=ngram,
        weighted_ngram=weighted,
        syntax=syntax,
        dataflow=dataflow,
        token_match=token_match,
        identifier_match=identifier_match,
        weights=weights,
        composite=composite,
        diagnostics=diagnostics,
    )


def codebleu(
    candidate_source: str,
    reference_source: str,
    weights: tuple[float, float, float, float] = DEFAULT_WEIGHTS,
    max_n: int = DEFAULT_MAX_N,
    keyword_weight: float = DEFAULT_KEYWORD_WEIGHT,
) -> CodeBleuReport:
    if abs(sum(weights) - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")
    cand_stream = tokenize(candidate_source)
    ref_stream = tokenize(reference_source)
    cand_tree = parse_tokens(cand_stream)
    ref_tree = parse_tokens(ref_stream)
    syntax, diag_s = syntax_match(cand_tree, ref_tree)
    dataflow, diag_d = dataflow_match(def_use(cand_tree), def_use(ref_tree))
    token_match, identifier_match = token_and_identifier_match(cand_stream, ref_stream)
    return _assemble(
        ngram_match(cand_stream, ref_stream, max_n),
        weighted_ngram_match(cand_stream, ref_stream, max_n, keyword_weight),
        syntax,
        dataflow,
        token_match,
        identifier_match,
        weights,
        tuple(diag_s + diag_d),
    )


def codebleu_package(
    candidate: dict[str, str],
    reference: dict[str, str],
    weights: tuple[float, float, float, float] = DEFAULT_WEIGHTS,
    max_n: int = DEFAULT_MAX_N,
    keyword_weight: float = DEFAULT_KEYWORD_WEIGHT,
) -> CodeBleuReport:
    """Token-count-weighted mean of per-file reports over the union of .py
    paths; a file present in only one tree is scored against empty source."""
    paths = sorted(
        p for p in set(candidate) | set(reference) if p.endswith(".py")
    )
    diagnostics: list[str] = []
    rows: list[tuple[float, CodeBleuReport]] = []
    for path in paths:
        cand_src = candidate.get(path)
        ref_src = reference.get(path)
        if cand_src is None:
            diagnostics.append(f"{path}: missing from candidate; scored against empty")
            cand_src = ""
        if ref_src is None:
            diagnostics.append(f"{path}: missing from reference; scored against empty")
            ref_src = ""
        report = codebleu(cand_src, ref_src, weights, max_n, keyword_weight)
        tokens = len(significant_tokens(tokenize(ref_src))) or 1
        rows.append((float(tokens), report))
    if not rows:
        return _assemble(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, weights, ("no .py files to compare",))
    total = sum(w for w, _ in rows)

    def mean(pick) -> float:
        return sum(w * pick(r) for w, r in rows) / total

    return _assemble(
        mean(lambda r: r.ngram),
        mean(lambda r: r.weighted_ngram),
        mean(lambda r: r.syntax),
        mean(lambda r: r.dataflow),
        mean(lambda r: r.token_match),
        mean(lambda r: r.identifier_match),
        weights,
        tuple(diagnostics),
    )


# ---------------------------------------------------------------------------
# Documentation metrics

_WORD_RE = re.compile(r"[A-Za-z]+")
_SENTENCE_SPLIT_RE = re.compile(r"[.!?]+")
_VOWEL_GROUP_RE = re.compile(r"[aeiouy]+")


def count_syllables(word: str) -> int:
    """Vowel-group count with the silent-e rule (final 'e' dropped unless the
    word ends in 'le'); every word counts at least one syllable."""
    w = word.lower()
    groups = len(_VOWEL_GROUP_RE.findall(w))
    if groups > 1 and w.endswith("e") and not w.endswith("le"):
        groups -= 1
    return max(1, groups)


def flesch_reading_ease(text: str) -> float:
    """206.835 - 1.015 * (words / sentences) - 84.6 * (syllables / words)."""
    words = _WORD_RE.findall(text)
    if not words:
        return 0.0
    sentences = sum(
        1 for seg in _SENTENCE_SPLIT_RE.split(text) if _WORD_RE.search(seg)
    )
    sentences = max(1, sentences)
    syllables = sum(count_syllables(w) for w in words)
    return 206.835 - 1.015 * (len(words) / sentences) - 84.6 * (syllables / len(words))


def _term_vector(text: str) -> Counter:
    return Counter(
        w for w in _WORD_RE.findall(text.lower()) if w not in STOPWORDS
    )


def _cosine(a: Counter, b: Counter) -> float:
    if not a or not b:
        return 0.0
    dot = sum(count * b.get(term, 0) for term, count in a.items())
    norm = math.sqrt(sum(c * c for c in a.values())) * math.sqrt(sum(c * c for c in b.values()))
    return dot / norm if norm else 0.0


@dataclass(frozen=True)
class DocMetricsReport:
    flesch: float
    consistency: float
    cosine_similarity: float
    coherence: tuple[float, ...]
    mean_coherence: float

    def as_dict(self) -> dict:
        return {
            "flesch_reading_ease": self.flesch,
            "consistency": self.consistency,
            "cosine_similarity": self.cosine_similarity,
            "coherence": list(self.coherence),
            "mean_coherence": self.mean_coherence,
        }


def doc_metrics(doc) -> DocMetricsReport:
    """Metrics over a DocBundle (anything exposing .sections of .title/.body)."""
    bodies = [section.body for section in doc.sections]
    vectors = [_term_vector(body) for body in bodies]
    coherence = tuple(
        _cosine(vectors[i], vectors[i + 1]) for i in range(len(vectors) - 1)
    )
    mean_coherence = sum(coherence) / len(coherence) if coherence else 0.0

    full_text = "\n\n".join(bodies)
    whole = _term_vector(full_text)
    cosine_similarity = (
        sum(_cosine(v, whole) for v in vectors) / len(vectors) if vectors else 0.0
    )

    if len(bodies) < 2:
        consistency = 1.0
    else:
        scores = [flesch_reading_ease(b) for b in bodies]
        mu = sum(scores) / len(scores)
        sigma = math.sqrt(sum((s - mu) ** 2 for s in scores) / len(scores))
        if mu == 0:
            consistency = 1.0 if sigma == 0 else 0.0
        else:
            consistency = 1.0 - min(1.0, sigma / abs(mu))

    return DocMetricsReport(
        flesch=flesch_reading_ease(full_text),
        consistency=consistency,
        cosine_similarity=cosine_similarity,
        coherence=coherence,
        mean_coherence=mean_coherence,
    )


# ---------------------------------------------------------------------------
# Model review and agreement statistics


@dataclass(frozen=True)
class ReviewScore:
    rubric: str
    scores: dict[str, float]
    reviewer_model: str


def model_review(
    gateway,
    profile,
    policy,
    rubric: str,
    artifact_text: str,
    max_retries: int = 2,
) -> ReviewScore:
    """Ask the reviewer model to score the artifact on the rubric's criteria."""
    from .gateway import ChatMessage, CompletionRequest
    from .planner import extract_json_block
    from .prompts import render_prompt

    if rubric not in REVIEW_RUBRICS:
        raise ValueError(f"unknown rubric {rubric!r}; choose from {sorted(REVIEW_RUBRICS)}")
    if not artifact_text:
        raise ValueError("artifact_text must be non-empty")
    criteria = REVIEW_RUBRICS[rubric]
    prompt = render_prompt(
        "review",
        rubric=rubric,
        criteria=", ".join(criteria),
        artifact=artifact_text,
    )
    request = CompletionRequest(
        model_id=profile.default_model,
        messages=(ChatMessage("user", prompt),),
    )
    last_error: Exception | None = None
    for _ in range(max_retries + 1):
        result = gateway.complete(profile, request, policy)
        try:
            payload = extract_json_block(result.text)
            scores = {}
            for criterion in criteria:
                if criterion not in payload:
                    raise MalformedJudgeOutput(f"missing criterion {criterion!r}")
                value = payload[criterion]
                if not isinstance(value, (int, float)) or isinstance(value, bool):
                    raise MalformedJudgeOutput(f"criterion {criterion!r} is not numeric")
                scores[criterion] = min(10.0, max(0.0, float(value)))
            return ReviewScore(rubric=rubric, scores=scores, reviewer_model=request.model_id)
        except MalformedJudgeOutput as err:
            last_error = err
    raise MalformedJudgeOutput(f"no well-formed review after {max_retries + 1} attempts") from last_error


@dataclass(frozen=True)
class AgreementReport:
    pearson_r: float | None
    spearman_rho: float | None
    cohen_kappa: float
    degenerate: bool = False

    def as_dict(self) -> dict:
        return {
            "pearson_r": self.pearson_r,
            "spearman_rho": self.spearman_rho,
            "cohen_kappa": self.cohen_kappa,
            "degenerate": self.degenerate,
        }


def _pearson(x: list[float], y: list[float]) -> float | None:
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    sx = sum((a - mx) ** 2 for a in x)
    sy = sum((b - my) ** 2 for b in y)
    if sx == 0 or sy == 0:
        return None
    cov = sum((a - mx) * (b - my) for a, b in zip(x, y))
    return cov / math.sqrt(sx * sy)


def _fractional_ranks(values: list[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _round_half_up(value: float) -> int:
    return math.floor(value + 0.5)


def agreement(x: list[float], y: list[float]) -> AgreementReport:
    """Pearson r, Spearman rho (fractional ranks), and unweighted Cohen's
    kappa with values binned to integers 0..10 (round half up)."""
    if len(x) != len(y) or len(x) < 2:
        raise ValueError("x and y must have equal length >= 2")
    pearson = _pearson(list(x), list(y))
    spearman = _pearson(_fractional_ranks(list(x)), _fractional_ranks(list(y)))

    bx = [_round_half_up(min(10.0, max(0.0, v))) for v in x]
    by = [_round_half_up(min(10.0, max(0.0, v))) for v in y]
    n = len(bx)
    po = sum(1 for a, b in zip(bx, by) if a == b) / n
    px = Counter(bx)
    py = Counter(by)
    pe = sum((px.get(k, 0) / n) * (py.get(k, 0) / n) for k in range(0, 11))
    kappa = 1.0 if pe == 1.0 else (po - pe) / (1 - pe)

    return AgreementReport(
        pearson_r=pearson,
        spearman_rho=spearman,
        cohen_kappa=kappa,
        degenerate=pearson is None or spearman is None,
    )
