"""Prompt rendering, strict response parsing, and the agreement filter.

A sentence is kept only when every temperature run parses cleanly and all
runs agree field-for-field on every token. Anything else becomes a discard
record with a categorized reason; invalid annotations can never leak past
this module.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources

from .corpus import CorpusRecord
from .providers import AnnotationProvider, ProviderError
from .schema import (
    AnnotatedSentence,
    LanguageProfile,
    OffsetMismatchError,
    Provenance,
    TokenAnnotation,
    reconstruct_offsets,
    validate_iob,
    validate_tags,
)

PLACEHOLDER = "{sentence}"

MALFORMED_JSON = "malformed-json"
MISSING_KEY = "missing-key"
TAG_VIOLATION = "tag-violation"
OFFSET_MISMATCH = "offset-mismatch"


class TemplateError(ValueError):
    """Prompt template does not contain exactly one {sentence} placeholder."""


class ResponseParseError(ValueError):
    """A provider response that failed strict parsing, with its category."""

    def __init__(self, category: str, message: str):
        super().__init__(f"{category}: {message}")
        self.category = category
        self.detail = message


@dataclass(frozen=True)
class PromptTemplate:
    language: str
    body: str

    def __post_init__(self):
        n = self.body.count(PLACEHOLDER)
        if n != 1:
            raise TemplateError(
                f"template must contain exactly one {PLACEHOLDER}, found {n}"
            )


def load_template(language: str) -> PromptTemplate:
    body = (
        resources.files("histannot.data")
        .joinpath(f"prompts/{language}.txt")
        .read_text("utf-8")
    )
    return PromptTemplate(language=language, body=body)


def render_prompt(template: PromptTemplate | str, sentence_text: str) -> str:
    """Substitute the sentence into the template, leaving all other bytes alone."""
    if not sentence_text:
        raise ValueError("sentence_text must be non-empty")
    body = template.body if isinstance(template, PromptTemplate) else template
    n = body.count(PLACEHOLDER)
    if n != 1:
        raise TemplateError(
            f"template must contain exactly one {PLACEHOLDER}, found {n}"
        )
    return body.replace(PLACEHOLDER, sentence_text)


@dataclass(frozen=True)
class AgreementPolicy:
    """Which temperatures to run and how strictly to compare the results."""

    temperatures: tuple[float, ...]
    mode: str = "exact"  # "exact" or "exact-ignore-dep" (ablation flag)

    def __post_init__(self):
        if not self.temperatures:
            raise ValueError("at least one temperature required")
        if self.mode not in ("exact", "exact-ignore-dep"):
            raise ValueError(f"unknown agreement mode {self.mode!r}")


def default_policy(profile: LanguageProfile) -> AgreementPolicy:
    if profile.language == "chinese":
        return AgreementPolicy(temperatures=(0.1, 0.7))
    return AgreementPolicy(temperatures=(0.0,))


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    backoff: tuple[float, ...] = ()
    discard_on_exhaustion: bool = True

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


@dataclass(frozen=True)
class DiscardRecord:
    id: str
    stage: str
    reason: str

    def to_dict(self) -> dict:
        return {"id": self.id, "stage": self.stage, "reason": self.reason}


# ---------------------------------------------------------------------------
# Response parsing
# ---------------------------------------------------------------------------

def extract_json_object(text: str) -> str:
    """Return the first balanced top-level JSON object embedded in `text`.

    Providers routinely wrap their JSON in prose despite instructions, so we
    scan for the first '{' and track brace depth outside string literals.
    """
    start = text.find("{")
    if start < 0:
        raise ResponseParseError(MALFORMED_JSON, "no JSON object in response")
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        c = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif c == "\\":
                escaped = True
            elif c == '"':
                in_string = False
            continue
        if c == '"':
            in_string = True
        elif c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    raise ResponseParseError(MALFORMED_JSON, "unbalanced JSON object in response")


def _check_keys(obj: dict, required, where: str) -> None:
    required = set(required)
    got = set(obj)
    for k in sorted(required - got):
        raise ResponseParseError(MISSING_KEY, f"{where} missing key {k!r}")
    for k in sorted(got - required):
        raise ResponseParseError(MISSING_KEY, f"{where} has unexpected key {k!r}")


def parse_response(
    raw_text: str,
    profile: LanguageProfile,
    *,
    sentence_id: str,
    sentence_text: str,
    period: str = "",
    provenance: Provenance | None = None,
) -> AnnotatedSentence:
    """Strictly parse one provider response into a validated sentence.

    Any defect raises a ResponseParseError categorized as malformed-json,
    missing-key, tag-violation, or offset-mismatch.
    """
    obj_text = extract_json_object(raw_text)
    try:
        data = json.loads(obj_text)
    except json.JSONDecodeError as e:
        raise ResponseParseError(MALFORMED_JSON, f"invalid JSON: {e.msg}") from e
    if not isinstance(data, dict):
        raise ResponseParseError(MALFORMED_JSON, "top-level JSON value is not an object")
    _check_keys(data, profile.top_level_keys, "response")
    if "text" in profile.top_level_keys:
        if not isinstance(data["text"], str):
            raise ResponseParseError(MALFORMED_JSON, "'text' is not a string")
        if data["text"] != sentence_text:
            raise ResponseParseError(
                OFFSET_MISMATCH, "response 'text' differs from the input sentence"
            )
    tokens = data.get("tokens")
    if not isinstance(tokens, list) or not tokens:
        raise ResponseParseError(MALFORMED_JSON, "'tokens' must be a non-empty array")
    for i, tok in enumerate(tokens):
        if not isinstance(tok, dict):
            raise ResponseParseError(MALFORMED_JSON, f"token {i} is not an object")
        _check_keys(tok, profile.token_keys, f"token {i}")
        for k, v in tok.items():
            if not isinstance(v, str):
                raise ResponseParseError(
                    MALFORMED_JSON, f"token {i} key {k!r} is not a string"
                )
    texts = [tok["text"] for tok in tokens]
    try:
        offsets = reconstruct_offsets(sentence_text, texts, profile)
    except OffsetMismatchError as e:
        raise ResponseParseError(OFFSET_MISMATCH, str(e)) from e
    annotations = []
    for tok, off in zip(tokens, offsets):
        if profile.language == "french":
            ann = TokenAnnotation(
                token=off,
                upos=tok["pos"],
                xpos=tok["tag"],
                lemma=tok["lemma"],
                dep=tok["dep"],
                ent_iob=tok["ent"],
                ent_type="",
            )
        else:
            ann = TokenAnnotation(
                token=off,
                upos=tok["pos"],
                xpos=tok["tag"],
                lemma=None,
                dep=None,
                ent_iob=tok["ent_iob_"],
                ent_type=tok["ent_type_"],
            )
        annotations.append(ann)
    violations = []
    for i, ann in enumerate(annotations):
        violations.extend(f"token {i}: {v}" for v in validate_tags(ann, profile))
    violations.extend(validate_iob(annotations))
    if violations:
        raise ResponseParseError(TAG_VIOLATION, "; ".join(violations))
    return AnnotatedSentence(
        id=sentence_id,
        text=sentence_text,
        language=profile.language,
        period=period,
        tokens=tuple(annotations),
        provenance=provenance or Provenance(),
    )


# ---------------------------------------------------------------------------
# Agreement filter
# ---------------------------------------------------------------------------

_FIELD_NAMES = ("text", "upos", "xpos", "lemma", "dep", "ent_iob", "ent_type")


def agreement_disagreement(
    runs: list[AnnotatedSentence], ignore_dep: bool = False
) -> str | None:
    """Return None when all runs agree field-wise, else a reason string.

    The keep/discard decision is invariant under permutation of the runs:
    it holds iff every pair of runs is identical over all compared fields.
    """
    first = runs[0]
    for other in runs[1:]:
        if len(other.tokens) != len(first.tokens):
            return (
                f"disagreement: token counts differ "
                f"({len(first.tokens)} vs {len(other.tokens)})"
            )
        for k, (a, b) in enumerate(zip(first.tokens, other.tokens)):
            for name, va, vb in zip(_FIELD_NAMES, a.content_fields(), b.content_fields()):
                if ignore_dep and name == "dep":
                    continue
                if va != vb:
                    return f"disagreement at token {k}, field {name}"
    return None


def annotate_with_agreement(
    provider: AnnotationProvider,
    record: CorpusRecord,
    policy: AgreementPolicy,
    retry: RetryPolicy,
    profile: LanguageProfile,
    template: PromptTemplate,
) -> AnnotatedSentence | DiscardRecord:
    """Run one record through every policy temperature and keep it only on
    exact agreement; a singleton policy keeps any successfully parsed run."""
    prompt = render_prompt(template, record.text)
    parses: list[AnnotatedSentence] = []
    for temp in policy.temperatures:
        parsed = None
        last_error = ""
        for attempt in range(1, retry.max_attempts + 1):
            try:
                raw = provider.annotate(prompt, temp)
            except ProviderError as e:
                last_error = f"provider: {e}"
            else:
                try:
                    parsed = parse_response(
                        raw,
                        profile,
                        sentence_id=record.id,
                        sentence_text=record.text,
                        period=record.period,
                    )
                    break
                except ResponseParseError as e:
                    last_error = str(e)
            if attempt < retry.max_attempts and retry.backoff:
                time.sleep(retry.backoff[min(attempt - 1, len(retry.backoff) - 1)])
        if parsed is None:
            reason = (
                f"{last_error} (temperature {temp}, "
                f"{retry.max_attempts} attempts)"
            )
            if not retry.discard_on_exhaustion:
                raise ProviderError(reason)
            return DiscardRecord(id=record.id, stage="parse", reason=reason)
        parses.append(parsed)
    if len(parses) > 1:
        reason = agreement_disagreement(
            parses, ignore_dep=policy.mode == "exact-ignore-dep"
        )
        if reason is not None:
            return DiscardRecord(id=record.id, stage="agreement", reason=reason)
    kept = parses[0]
    provenance = Provenance(
        model=provider.model_id,
        temperatures=policy.temperatures,
        timestamp=provider.provenance_timestamp(),
    )
    return replace(kept, provenance=provenance)


@dataclass
class BatchResult:
    kept: list[AnnotatedSentence] = field(default_factory=list)
    discards: list[DiscardRecord] = field(default_factory=list)
    stats: dict = field(default_factory=dict)


def run_batch(
    provider: AnnotationProvider,
    records: list[CorpusRecord],
    policy: AgreementPolicy,
    profile: LanguageProfile,
    template: PromptTemplate,
    retry: RetryPolicy = RetryPolicy(),
    concurrency_limit: int = 1,
) -> BatchResult:
    """Annotate a batch with at most `concurrency_limit` calls in flight.

    Results are keyed by record id and reassembled in input order, so the
    kept/discarded partition never depends on completion order.
    """
    if concurrency_limit < 1:
        raise ValueError("concurrency_limit must be >= 1")
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate record ids in batch")

    def work(record: CorpusRecord):
        return annotate_with_agreement(provider, record, policy, retry, profile, template)

    with ThreadPoolExecutor(max_workers=concurrency_limit) as pool:
        outcomes = list(pool.map(work, records))

    result = BatchResult()
    per_stratum: dict[str, dict] = {}
    for record, outcome in zip(records, outcomes):
        bucket = per_stratum.setdefault(
            record.period or "", {"total": 0, "kept": 0, "discarded": 0}
        )
        bucket["total"] += 1
        if isinstance(outcome, DiscardRecord):
            result.discards.append(outcome)
            bucket["discarded"] += 1
        else:
            result.kept.append(outcome)
            bucket["kept"] += 1
    for bucket in per_stratum.values():
        bucket["keep_rate"] = bucket["kept"] / bucket["total"]
    result.stats = {
        "total": len(records),
        "kept": len(result.kept),
        "discarded": len(result.discards),
        "keep_rate": len(result.kept) / len(records) if records else 1.0,
        "per_stratum": dict(sorted(per_stratum.items())),
    }
    return result


def write_discards(path, discards) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for d in discards:
            f.write(json.dumps(d.to_dict(), ensure_ascii=False, sort_keys=True))
            f.write("\n")
