"""Corpus building: fix rules, UD consistency checks, augmentation, splits.

All transformations are pure functions over sentence lists and log every
change they make, so a built corpus can always be explained from its inputs.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from importlib import resources

from .corpus import derive_stratum_seed
from .schema import AnnotatedSentence, LanguageProfile, TokenAnnotation


class RuleError(ValueError):
    """Load-time fix-rule problem (syntax, unknown tag, or retrigger conflict)."""


class MappingError(ValueError):
    """Mapping table is not total over the inventory or maps outside it."""


@dataclass(frozen=True)
class FixRule:
    """One deterministic correction: surface match + optional tag preconditions.

    Replacements never touch token text, only upos/xpos/lemma.
    """

    match_text: str
    case_insensitive: bool = False
    match_upos: str | None = None
    match_xpos: str | None = None
    set_upos: str | None = None
    set_xpos: str | None = None
    set_lemma: str | None = None
    line: int = 0

    def __post_init__(self):
        if not self.match_text:
            raise RuleError("rule needs a surface form")
        if self.set_upos is None and self.set_xpos is None and self.set_lemma is None:
            raise RuleError(f"rule for {self.match_text!r} has no replacement")

    def matches(self, ann: TokenAnnotation) -> bool:
        text = ann.token.text
        if self.case_insensitive:
            if text.lower() != self.match_text.lower():
                return False
        elif text != self.match_text:
            return False
        if self.match_upos is not None and ann.upos != self.match_upos:
            return False
        if self.match_xpos is not None and ann.xpos != self.match_xpos:
            return False
        return True


_PRE_FIELDS = {"upos", "xpos"}
_SET_FIELDS = {"upos", "xpos", "lemma"}


def parse_rule_line(line: str, lineno: int) -> FixRule | None:
    """Parse `[(i)] surface [upos=X] [xpos=Y] -> field=value ...`; None for blanks."""
    text = line.strip()
    if not text or text.startswith("#"):
        return None
    if "->" not in text:
        raise RuleError(f"line {lineno}: missing '->'")
    left, right = text.split("->", 1)
    parts = left.split()
    ci = False
    if parts and parts[0] == "(i)":
        ci = True
        parts = parts[1:]
    if not parts:
        raise RuleError(f"line {lineno}: missing surface form")
    surface = parts[0]
    pre: dict[str, str] = {}
    for p in parts[1:]:
        if "=" not in p:
            raise RuleError(f"line {lineno}: bad precondition {p!r}")
        k, v = p.split("=", 1)
        if k not in _PRE_FIELDS:
            raise RuleError(f"line {lineno}: unknown precondition field {k!r}")
        pre[k] = v
    sets: dict[str, str] = {}
    for p in right.split():
        if "=" not in p:
            raise RuleError(f"line {lineno}: bad replacement {p!r}")
        k, v = p.split("=", 1)
        if k not in _SET_FIELDS:
            raise RuleError(f"line {lineno}: unknown replacement field {k!r}")
        sets[k] = v
    if not sets:
        raise RuleError(f"line {lineno}: rule has no replacement")
    return FixRule(
        match_text=surface,
        case_insensitive=ci,
        match_upos=pre.get("upos"),
        match_xpos=pre.get("xpos"),
        set_upos=sets.get("upos"),
        set_xpos=sets.get("xpos"),
        set_lemma=sets.get("lemma"),
        line=lineno,
    )


def _check_rule_tags(rule: FixRule, profile: LanguageProfile) -> None:
    for label, value, inventory in (
        ("precondition upos", rule.match_upos, profile.upos_inventory),
        ("precondition xpos", rule.match_xpos, profile.xpos_inventory),
        ("replacement upos", rule.set_upos, profile.upos_inventory),
        ("replacement xpos", rule.set_xpos, profile.xpos_inventory),
    ):
        if value is not None and value not in inventory:
            raise RuleError(
                f"line {rule.line}: {label} {value!r} not in {profile.language} inventory"
            )


def _surfaces_overlap(a: FixRule, b: FixRule) -> bool:
    if a.case_insensitive or b.case_insensitive:
        return a.match_text.lower() == b.match_text.lower()
    return a.match_text == b.match_text


def _post_value(rule: FixRule, fieldname: str) -> tuple[bool, str | None]:
    """(known, value) of a tag field after `rule` applied; unknown when the
    rule neither sets it nor constrained it."""
    set_v = getattr(rule, f"set_{fieldname}")
    if set_v is not None:
        return True, set_v
    match_v = getattr(rule, f"match_{fieldname}", None)
    if match_v is not None:
        return True, match_v
    return False, None


def _retrigger_conflict(r1: FixRule, r2: FixRule) -> bool:
    """Could a token rewritten by r1 match r2 and be changed further by it?"""
    if not _surfaces_overlap(r1, r2):
        return False
    for f in ("upos", "xpos"):
        want = getattr(r2, f"match_{f}")
        if want is None:
            continue
        known, have = _post_value(r1, f)
        if known and have != want:
            return False
    for f in ("upos", "xpos", "lemma"):
        target = getattr(r2, f"set_{f}")
        if target is None:
            continue
        known, have = _post_value(r1, f) if f != "lemma" else (
            (True, r1.set_lemma) if r1.set_lemma is not None else (False, None)
        )
        if not known or have != target:
            return True
    return False


def load_fix_rules(lines, profile: LanguageProfile) -> list[FixRule]:
    """Parse and validate a rule file; raises RuleError on any load-time defect.

    The non-retrigger check guarantees one pass over the list is a fixpoint:
    no rule's output may satisfy another rule's preconditions while that rule
    would still change the token.
    """
    rules = []
    for lineno, line in enumerate(lines, start=1):
        rule = parse_rule_line(line, lineno)
        if rule is not None:
            _check_rule_tags(rule, profile)
            rules.append(rule)
    for r1 in rules:
        for r2 in rules:
            if _retrigger_conflict(r1, r2):
                raise RuleError(
                    f"line {r1.line}: output of this rule can re-trigger rule at "
                    f"line {r2.line} (surface {r1.match_text!r})"
                )
    return rules


def apply_fix_rules(
    sentences: list[AnnotatedSentence], rules: list[FixRule]
) -> tuple[list[AnnotatedSentence], list[dict]]:
    """First matching rule per token applies, in rule-file order.

    Returns rewritten sentences plus a change log entry per modified field:
    {sentence_id, token_index, field, old, new}.
    """
    out = []
    log: list[dict] = []
    for sentence in sentences:
        new_tokens = []
        changed = False
        for idx, ann in enumerate(sentence.tokens):
            rule = next((r for r in rules if r.matches(ann)), None)
            if rule is None:
                new_tokens.append(ann)
                continue
            updates = {}
            for f, new_value in (
                ("upos", rule.set_upos),
                ("xpos", rule.set_xpos),
                ("lemma", rule.set_lemma),
            ):
                if new_value is None:
                    continue
                old = getattr(ann, f)
                if old != new_value:
                    updates[f] = new_value
                    log.append(
                        {
                            "sentence_id": sentence.id,
                            "token_index": idx,
                            "field": f,
                            "old": old,
                            "new": new_value,
                        }
                    )
            if updates:
                ann = replace(ann, **updates)
                changed = True
            new_tokens.append(ann)
        out.append(replace(sentence, tokens=tuple(new_tokens)) if changed else sentence)
    return out, log


# ---------------------------------------------------------------------------
# XPOS -> UPOS consistency
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MappingTable:
    language: str
    entries: dict  # xpos -> tuple of permitted upos

    def permitted(self, xpos: str) -> tuple[str, ...]:
        return self.entries[xpos]


def load_mapping(profile: LanguageProfile, path=None) -> MappingTable:
    """Load the shipped mapping for the profile, or a mapping file at `path`."""
    if path is None:
        raw = json.loads(
            resources.files("histannot.data")
            .joinpath(f"mappings/{profile.language}.json")
            .read_text("utf-8")
        )
    else:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    entries = {k: tuple(v) for k, v in raw["entries"].items()}
    missing = sorted(profile.xpos_inventory - set(entries))
    if missing:
        raise MappingError(f"mapping not total: missing xpos {missing}")
    for xpos, permitted in entries.items():
        if not permitted:
            raise MappingError(f"mapping for {xpos!r} is empty")
        bad = sorted(set(permitted) - profile.upos_inventory)
        if bad:
            raise MappingError(f"mapping for {xpos!r} permits unknown upos {bad}")
    return MappingTable(language=raw.get("language", profile.language), entries=entries)


def check_ud_consistency(
    sentence: AnnotatedSentence, mapping: MappingTable, auto_correct: bool = False
) -> tuple[AnnotatedSentence, list[dict]]:
    """Flag tokens whose upos is not permitted for their xpos.

    In auto-correct mode the upos is rewritten when the permitted set is a
    singleton; otherwise the token is only flagged.
    """
    flags: list[dict] = []
    new_tokens = []
    changed = False
    for idx, ann in enumerate(sentence.tokens):
        permitted = mapping.permitted(ann.xpos)
        if ann.upos in permitted:
            new_tokens.append(ann)
            continue
        flag = {
            "sentence_id": sentence.id,
            "token_index": idx,
            "xpos": ann.xpos,
            "upos": ann.upos,
            "permitted": list(permitted),
            "corrected": False,
        }
        if auto_correct and len(permitted) == 1:
            flag["corrected"] = True
            flag["new_upos"] = permitted[0]
            ann = replace(ann, upos=permitted[0])
            changed = True
        flags.append(flag)
        new_tokens.append(ann)
    out = replace(sentence, tokens=tuple(new_tokens)) if changed else sentence
    return out, flags


def check_corpus_consistency(
    sentences: list[AnnotatedSentence], mapping: MappingTable, auto_correct: bool = False
) -> tuple[list[AnnotatedSentence], list[dict]]:
    out = []
    all_flags: list[dict] = []
    for s in sentences:
        s2, flags = check_ud_consistency(s, mapping, auto_correct)
        out.append(s2)
        all_flags.extend(flags)
    return out, all_flags


# ---------------------------------------------------------------------------
# Rare-tag augmentation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AugmentationSpec:
    rare_upos: frozenset[str] = frozenset({"INTJ"})
    rare_xpos: frozenset[str] = frozenset({"VIMP"})
    factor: int = 2

    def __post_init__(self):
        if self.factor < 1:
            raise ValueError("augmentation factor must be >= 1")

    def selects(self, sentence: AnnotatedSentence) -> bool:
        return any(
            t.upos in self.rare_upos or t.xpos in self.rare_xpos
            for t in sentence.tokens
        )


def augment_rare(
    train: list[AnnotatedSentence], spec: AugmentationSpec
) -> tuple[list[AnnotatedSentence], dict]:
    """Duplicate rare-tag sentences (factor - 1) extra times, training split only.

    Duplicates are deep-equal to the original except for a provenance marker.
    Augmentation runs after splitting so duplicates can never leak across
    partitions.
    """
    out: list[AnnotatedSentence] = []
    eligible = 0
    added = 0
    for sentence in train:
        out.append(sentence)
        if spec.factor > 1 and spec.selects(sentence):
            eligible += 1
            for k in range(1, spec.factor):
                marker = sentence.provenance.extra + (("augmented_copy", str(k)),)
                out.append(
                    replace(
                        sentence,
                        provenance=replace(sentence.provenance, extra=marker),
                    )
                )
                added += 1
    report = {
        "input": len(train),
        "eligible": eligible,
        "duplicates_added": added,
        "output": len(out),
        "factor": spec.factor,
        "rare_upos": sorted(spec.rare_upos),
        "rare_xpos": sorted(spec.rare_xpos),
    }
    return out, report


# ---------------------------------------------------------------------------
# Stratified split
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0
    stratify_key: str = "period"

    def __post_init__(self):
        if len(self.ratios) != 3 or any(r <= 0 for r in self.ratios):
            raise ValueError("ratios must be three positive numbers")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError(f"ratios must sum to 1, got {sum(self.ratios)}")


def stratified_split(
    sentences: list[AnnotatedSentence], spec: SplitSpec
) -> tuple[dict[str, list[AnnotatedSentence]], list[str]]:
    """Seeded per-stratum shuffle, then floor-rule partition sizes.

    Per stratum of size n: dev and test each get floor(n * ratio), train gets
    the remainder. Strata with fewer than 3 sentences go entirely to train
    with a warning. Deterministic for a fixed seed.
    """
    strata: dict[str, list[AnnotatedSentence]] = {}
    for s in sentences:
        if not s.period:
            raise ValueError(f"sentence {s.id!r} has no period label")
        strata.setdefault(s.period, []).append(s)
    splits: dict[str, list[AnnotatedSentence]] = {"train": [], "dev": [], "test": []}
    warnings = []
    for label in sorted(strata):
        pool = list(strata[label])
        rng = random.Random(derive_stratum_seed(spec.seed, label))
        rng.shuffle(pool)
        n = len(pool)
        if n < 3:
            warnings.append(
                f"stratum {label!r} has only {n} sentence(s); all assigned to train"
            )
            splits["train"].extend(pool)
            continue
        n_dev = math.floor(n * spec.ratios[1])
        n_test = math.floor(n * spec.ratios[2])
        n_train = n - n_dev - n_test
        splits["train"].extend(pool[:n_train])
        splits["dev"].extend(pool[n_train : n_train + n_dev])
        splits["test"].extend(pool[n_train + n_dev :])
    return splits, warnings
