"""Annotation data model, closed tag inventories, and structural validators.

Everything downstream (driver, builder, evaluation, review) trusts only
sentences that passed these checks. Validators are pure functions over
immutable values, so they are safe to call from worker threads.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources

IOB_VALUES = ("B", "I", "O")


class SchemaError(ValueError):
    """Raised when an annotation value breaks a structural invariant."""


class OffsetMismatchError(SchemaError):
    """Token texts do not reconstruct the sentence; carries the first bad offset."""

    def __init__(self, position: int, message: str):
        super().__init__(f"offset {position}: {message}")
        self.position = position


@dataclass(frozen=True)
class Token:
    """A surface token anchored to character offsets in its sentence."""

    text: str
    char_start: int
    char_end: int
    trailing_space: bool = False

    def __post_init__(self):
        if not self.text:
            raise SchemaError("token text must be non-empty")
        if not self.char_start < self.char_end:
            raise SchemaError(
                f"token span ({self.char_start}, {self.char_end}) must satisfy start < end"
            )

    @property
    def span(self) -> tuple[int, int]:
        return (self.char_start, self.char_end)


@dataclass(frozen=True)
class TokenAnnotation:
    """All annotation layers for one token. dep is stored opaque, never scored."""

    token: Token
    upos: str
    xpos: str
    lemma: str | None = None
    dep: str | None = None
    ent_iob: str = "O"
    ent_type: str = ""

    def content_fields(self) -> tuple:
        """Field tuple used for exact agreement comparison (includes dep)."""
        return (
            self.token.text,
            self.upos,
            self.xpos,
            self.lemma,
            self.dep,
            self.ent_iob,
            self.ent_type,
        )


@dataclass(frozen=True)
class Provenance:
    model: str = ""
    temperatures: tuple[float, ...] = ()
    timestamp: str = ""
    extra: tuple[tuple[str, str], ...] = ()

    def to_dict(self) -> dict:
        d = {
            "model": self.model,
            "temperatures": list(self.temperatures),
            "timestamp": self.timestamp,
        }
        d.update(dict(self.extra))
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Provenance":
        extra = tuple(
            sorted((k, str(v)) for k, v in d.items() if k not in ("model", "temperatures", "timestamp"))
        )
        return cls(
            model=d.get("model", ""),
            temperatures=tuple(float(t) for t in d.get("temperatures", [])),
            timestamp=d.get("timestamp", ""),
            extra=extra,
        )


@dataclass(frozen=True)
class AnnotatedSentence:
    id: str
    text: str
    language: str
    period: str
    tokens: tuple[TokenAnnotation, ...]
    provenance: Provenance = field(default_factory=Provenance)

    def token_texts(self) -> list[str]:
        return [t.token.text for t in self.tokens]

    def spans(self) -> list[tuple[int, int]]:
        return [t.token.span for t in self.tokens]


@dataclass(frozen=True)
class LanguageProfile:
    """Closed tag vocabularies and per-language field requirements."""

    language: str
    upos_inventory: frozenset[str]
    xpos_inventory: frozenset[str]
    ner_inventory: frozenset[str]
    requires_lemma: bool
    requires_dep: bool
    whitespace_script: bool
    adjudication_fields: tuple[str, ...]
    token_keys: tuple[str, ...]
    top_level_keys: tuple[str, ...]

    @property
    def ner_typed(self) -> bool:
        """False for untyped flat-IOB profiles (entity letters only, no types)."""
        return bool(self.ner_inventory)


def _load_profiles() -> dict[str, LanguageProfile]:
    raw = json.loads(
        resources.files("histannot.data").joinpath("profiles.json").read_text("utf-8")
    )
    profiles = {}
    for name, p in raw["profiles"].items():
        profiles[name] = LanguageProfile(
            language=p["language"],
            upos_inventory=frozenset(p["upos_inventory"]),
            xpos_inventory=frozenset(p["xpos_inventory"]),
            ner_inventory=frozenset(p["ner_inventory"]),
            requires_lemma=p["requires_lemma"],
            requires_dep=p["requires_dep"],
            whitespace_script=p["whitespace_script"],
            adjudication_fields=tuple(p["adjudication_fields"]),
            token_keys=tuple(p["token_keys"]),
            top_level_keys=tuple(p["top_level_keys"]),
        )
    return profiles


_PROFILES = _load_profiles()


def get_profile(language: str) -> LanguageProfile:
    try:
        return _PROFILES[language]
    except KeyError:
        raise SchemaError(
            f"unknown language profile {language!r}; available: {sorted(_PROFILES)}"
        ) from None


def available_profiles() -> list[str]:
    return sorted(_PROFILES)


# ---------------------------------------------------------------------------
# Validators
# ---------------------------------------------------------------------------

def validate_tags(annotation: TokenAnnotation, profile: LanguageProfile) -> list[str]:
    """Check every tag field against the profile's closed inventories.

    Returns a list of violation messages; empty means the annotation is clean.
    Violations are data, not exceptions: callers decide whether to discard.
    """
    v = []
    if annotation.upos not in profile.upos_inventory:
        v.append(f"upos {annotation.upos!r} not in UD inventory")
    if annotation.xpos not in profile.xpos_inventory:
        v.append(f"xpos {annotation.xpos!r} not in {profile.language} inventory")
    if annotation.ent_iob not in IOB_VALUES:
        v.append(f"ent_iob {annotation.ent_iob!r} not one of B/I/O")
    if profile.ner_typed:
        if annotation.ent_iob == "O" and annotation.ent_type:
            v.append(f"type on O token: {annotation.ent_type!r}")
        elif annotation.ent_iob in ("B", "I"):
            if not annotation.ent_type:
                v.append(f"entity token ({annotation.ent_iob}) missing a type")
            elif annotation.ent_type not in profile.ner_inventory:
                v.append(f"ent_type {annotation.ent_type!r} not in NER inventory")
    else:
        if annotation.ent_type:
            v.append(
                f"ent_type {annotation.ent_type!r} on untyped-{profile.language} profile"
            )
    if profile.requires_lemma:
        if not annotation.lemma:
            v.append("lemma required but missing")
    elif annotation.lemma is not None:
        v.append("lemma present but profile does not define lemmas")
    if annotation.dep is not None and annotation.dep == "":
        v.append("dep must be a non-empty string when present")
    return v


def iob_violations(pairs: list[tuple[str, str]]) -> list[str]:
    """Strict IOB2 check over (iob, type) pairs.

    An I is valid only when the previous token is B or I of the same type.
    """
    violations = []
    for i, (iob, etype) in enumerate(pairs):
        if iob not in IOB_VALUES:
            violations.append(f"index {i}: illegal IOB value {iob!r}")
            continue
        if iob == "I":
            if i == 0 or pairs[i - 1][0] == "O" or pairs[i - 1][1] != etype:
                violations.append(f"index {i}: I-{etype or '∅'} without preceding B/I of same type")
    return violations


def repair_iob(pairs: list[tuple[str, str]]) -> tuple[list[tuple[str, str]], list[str]]:
    """IOB2 repair: rewrite each orphan I to B, reporting every rewrite.

    Repair is idempotent and its output always passes the strict check.
    """
    repaired: list[tuple[str, str]] = []
    reports = []
    for i, (iob, etype) in enumerate(pairs):
        if iob == "I":
            prev_ok = i > 0 and repaired[i - 1][0] in ("B", "I") and repaired[i - 1][1] == etype
            if not prev_ok:
                repaired.append(("B", etype))
                reports.append(f"index {i}: rewrote I-{etype or '∅'} to B")
                continue
        repaired.append((iob, etype))
    return repaired, reports


def validate_iob(
    annotations: list[TokenAnnotation] | tuple[TokenAnnotation, ...],
    repair: bool = False,
):
    """Validate (or repair) the entity IOB sequence of a sentence.

    Strict mode returns a list of violation messages. Repair mode returns
    (repaired annotations, repair reports) with orphan I rewritten to B.
    """
    pairs = [(a.ent_iob, a.ent_type) for a in annotations]
    if not repair:
        return iob_violations(pairs)
    repaired, reports = repair_iob(pairs)
    out = [
        replace(a, ent_iob=iob, ent_type=etype)
        for a, (iob, etype) in zip(annotations, repaired)
    ]
    return out, reports


def reconstruct_offsets(
    sentence_text: str,
    token_texts: list[str],
    profile: LanguageProfile,
    separators: str = " ",
) -> list[Token]:
    """Greedy left-to-right alignment of token texts onto the sentence.

    Non-whitespace scripts must concatenate to the sentence exactly. For
    whitespace scripts at most one separator character is permitted between
    consecutive tokens (and after the last); each consumed separator sets the
    preceding token's trailing_space. One-separator gaps keep the round-trip
    (join with a single space where trailing_space) exact.
    """
    if not token_texts:
        raise OffsetMismatchError(0, "empty token list")
    s = sentence_text
    pos = 0
    spans: list[tuple[int, int]] = []
    trailing = []
    for i, t in enumerate(token_texts):
        if not t:
            raise OffsetMismatchError(pos, f"token {i} has empty text")
        if profile.whitespace_script and i > 0 and pos < len(s) and s[pos] in separators:
            trailing[-1] = True
            pos += 1
        if not s.startswith(t, pos):
            bad = pos
            limit = min(len(s) - pos, len(t))
            for j in range(limit):
                if s[pos + j] != t[j]:
                    bad = pos + j
                    break
            else:
                bad = pos + limit
            raise OffsetMismatchError(
                bad, f"token {i} {t!r} does not match sentence text"
            )
        spans.append((pos, pos + len(t)))
        pos += len(t)
        trailing.append(False)
    if profile.whitespace_script and pos < len(s) and s[pos] in separators:
        trailing[-1] = True
        pos += 1
    if pos != len(s):
        raise OffsetMismatchError(pos, "sentence text not fully covered by tokens")
    return [
        Token(text=t, char_start=a, char_end=b, trailing_space=ts)
        for t, (a, b), ts in zip(token_texts, spans, trailing)
    ]


def join_tokens(tokens: list[Token] | tuple[Token, ...]) -> str:
    """Inverse of reconstruct_offsets: one space where trailing_space is set."""
    return "".join(t.text + (" " if t.trailing_space else "") for t in tokens)


def validate_sentence(sentence: AnnotatedSentence, profile: LanguageProfile) -> list[str]:
    """Run every structural validator; returns all violations found."""
    violations = []
    if sentence.language != profile.language:
        violations.append(
            f"sentence language {sentence.language!r} does not match profile {profile.language!r}"
        )
    try:
        rebuilt = reconstruct_offsets(sentence.text, sentence.token_texts(), profile)
    except OffsetMismatchError as e:
        violations.append(str(e))
    else:
        stored = [(t.token.span, t.token.trailing_space) for t in sentence.tokens]
        fresh = [(t.span, t.trailing_space) for t in rebuilt]
        if stored != fresh:
            violations.append("stored offsets disagree with reconstruction")
    for i, ann in enumerate(sentence.tokens):
        violations.extend(f"token {i}: {v}" for v in validate_tags(ann, profile))
    violations.extend(validate_iob(sentence.tokens))
    return violations


# ---------------------------------------------------------------------------
# JSONL (de)serialization — the on-disk sentence schema mirrors the types
# ---------------------------------------------------------------------------

def sentence_to_dict(sentence: AnnotatedSentence) -> dict:
    return {
        "id": sentence.id,
        "text": sentence.text,
        "language": sentence.language,
        "period": sentence.period,
        "tokens": [
            {
                "token": {
                    "text": a.token.text,
                    "char_start": a.token.char_start,
                    "char_end": a.token.char_end,
                    "trailing_space": a.token.trailing_space,
                },
                "upos": a.upos,
                "xpos": a.xpos,
                "lemma": a.lemma,
                "dep": a.dep,
                "ent_iob": a.ent_iob,
                "ent_type": a.ent_type,
            }
            for a in sentence.tokens
        ],
        "provenance": sentence.provenance.to_dict(),
    }


def sentence_from_dict(d: dict) -> AnnotatedSentence:
    tokens = tuple(
        TokenAnnotation(
            token=Token(
                text=t["token"]["text"],
                char_start=t["token"]["char_start"],
                char_end=t["token"]["char_end"],
                trailing_space=t["token"]["trailing_space"],
            ),
            upos=t["upos"],
            xpos=t["xpos"],
            lemma=t.get("lemma"),
            dep=t.get("dep"),
            ent_iob=t.get("ent_iob", "O"),
            ent_type=t.get("ent_type", ""),
        )
        for t in d["tokens"]
    )
    return AnnotatedSentence(
        id=d["id"],
        text=d["text"],
        language=d["language"],
        period=d["period"],
        tokens=tokens,
        provenance=Provenance.from_dict(d.get("provenance", {})),
    )


def write_sentences(path, sentences) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for s in sentences:
            f.write(json.dumps(sentence_to_dict(s), ensure_ascii=False, sort_keys=True))
            f.write("\n")


def read_sentences(path) -> list[AnnotatedSentence]:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(sentence_from_dict(json.loads(line)))
    return out
