"""Segmentation-aware scoring of predictions against gold.

Tokens align by exact character spans, POS is joint span+tag F1 (reducing to
plain accuracy on identical tokenizations), NER is span-level F1 over exact
(start, end, type) triples, and every tagging metric can be normalized by
token F1 to factor segmentation quality out of tagging quality.

Empty-side conventions: both sides empty scores 100 (vacuously true, logged
in counts); exactly one side empty scores 0.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

from .schema import AnnotatedSentence, LanguageProfile, iob_violations, repair_iob


class EvaluationError(ValueError):
    """Gold/prediction inputs are not comparable."""


def round2(value: float) -> float:
    """Round to two decimals, half up — applied only at reporting time."""
    return float(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class TokenAlignment:
    """Span-exact token pairing between one gold and one pred sentence."""

    matched: tuple[tuple[int, int], ...]
    gold_only: tuple[int, ...]
    pred_only: tuple[int, ...]
    n_gold: int
    n_pred: int


def align_tokens(gold: AnnotatedSentence, pred: AnnotatedSentence) -> TokenAlignment:
    """Pair tokens whose (char_start, char_end) spans are identical."""
    if gold.text != pred.text:
        raise EvaluationError(
            f"sentence {gold.id!r}: gold and prediction texts differ"
        )
    gold_spans = {t.token.span: i for i, t in enumerate(gold.tokens)}
    pred_spans = {t.token.span: j for j, t in enumerate(pred.tokens)}
    matched = tuple(
        sorted(
            (gi, pred_spans[span])
            for span, gi in gold_spans.items()
            if span in pred_spans
        )
    )
    matched_gold = {gi for gi, _ in matched}
    matched_pred = {pj for _, pj in matched}
    return TokenAlignment(
        matched=matched,
        gold_only=tuple(i for i in range(len(gold.tokens)) if i not in matched_gold),
        pred_only=tuple(j for j in range(len(pred.tokens)) if j not in matched_pred),
        n_gold=len(gold.tokens),
        n_pred=len(pred.tokens),
    )


def prf_from_counts(correct: int, n_pred: int, n_gold: int) -> tuple[float, float, float]:
    """Percent precision/recall/F1 with the empty-side conventions."""
    if n_pred == 0 and n_gold == 0:
        return 100.0, 100.0, 100.0
    if n_pred == 0 or n_gold == 0:
        return 0.0, 0.0, 0.0
    precision = 100.0 * correct / n_pred
    recall = 100.0 * correct / n_gold
    if precision + recall == 0:
        return precision, recall, 0.0
    f1 = 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def token_f1(alignment: TokenAlignment) -> dict[str, float]:
    p, r, f = prf_from_counts(len(alignment.matched), alignment.n_pred, alignment.n_gold)
    return {"precision": p, "recall": r, "f1": f}


def pos_score(
    gold: AnnotatedSentence, pred: AnnotatedSentence, alignment: TokenAlignment
) -> float:
    """Joint span+tag F1: a pair counts only when spans match and upos agree.

    On identical tokenizations this equals plain tagging accuracy, and it is
    always bounded above by token F1, which keeps normalization well-behaved.
    """
    correct = sum(
        1
        for gi, pj in alignment.matched
        if gold.tokens[gi].upos == pred.tokens[pj].upos
    )
    _, _, f = prf_from_counts(correct, alignment.n_pred, alignment.n_gold)
    return f


def lemma_accuracy(
    gold: AnnotatedSentence,
    pred: AnnotatedSentence,
    alignment: TokenAlignment,
    case_sensitive: bool = True,
) -> float | None:
    """Equal-lemma rate over matched pairs only; None when nothing matched."""
    if not alignment.matched:
        return None
    correct = 0
    for gi, pj in alignment.matched:
        a = gold.tokens[gi].lemma or ""
        b = pred.tokens[pj].lemma or ""
        if not case_sensitive:
            a, b = a.lower(), b.lower()
        if a == b:
            correct += 1
    return 100.0 * correct / len(alignment.matched)


def decode_entities(
    sentence: AnnotatedSentence, repair: bool = False
) -> set[tuple[int, int, str]]:
    """Maximal B(I)* runs of one type as (char_start, char_end, type) spans.

    The IOB sequence must be strictly valid; pass repair=True to apply IOB2
    repair first.
    """
    pairs = [(t.ent_iob, t.ent_type) for t in sentence.tokens]
    if repair:
        pairs, _ = repair_iob(pairs)
    else:
        violations = iob_violations(pairs)
        if violations:
            raise EvaluationError(
                f"sentence {sentence.id!r}: invalid IOB sequence ({'; '.join(violations)})"
            )
    spans = set()
    i = 0
    while i < len(pairs):
        iob, etype = pairs[i]
        if iob != "B":
            i += 1
            continue
        j = i
        while j + 1 < len(pairs) and pairs[j + 1] == ("I", etype):
            j += 1
        spans.add(
            (sentence.tokens[i].token.char_start, sentence.tokens[j].token.char_end, etype)
        )
        i = j + 1
    return spans


def ner_f1(
    gold: AnnotatedSentence, pred: AnnotatedSentence, repair_pred: bool = False
) -> float:
    """Span-level F1 over exact (start, end, type) triples."""
    g = decode_entities(gold)
    p = decode_entities(pred, repair=repair_pred)
    _, _, f = prf_from_counts(len(g & p), len(p), len(g))
    return f


def normalized(metric_pct: float, token_f1_pct: float) -> float | None:
    """(metric / token F1) x 100, reported to two decimals, half-up.

    Undefined (None) when token F1 is zero. When token F1 is 100 the result
    equals the metric itself at reporting precision.
    """
    if token_f1_pct == 0:
        return None
    return round2(metric_pct / token_f1_pct * 100.0)


# ---------------------------------------------------------------------------
# Corpus-level evaluation
# ---------------------------------------------------------------------------

@dataclass
class EvalReport:
    token_precision: float = 0.0
    token_recall: float = 0.0
    token_f1: float = 0.0
    pos_score: float = 0.0
    pos_norm: float | None = None
    lemma_accuracy: float | None = None
    ner_f1: float | None = None
    ner_norm: float | None = None
    ner_token_accuracy: float | None = None
    counts: dict = field(default_factory=dict)
    per_stratum: dict = field(default_factory=dict)
    gold_fingerprint: str = ""

    def to_dict(self) -> dict:
        d = {
            "token_precision": self.token_precision,
            "token_recall": self.token_recall,
            "token_f1": self.token_f1,
            "pos_score": self.pos_score,
            "pos_norm": self.pos_norm,
            "lemma_accuracy": self.lemma_accuracy,
            "ner_f1": self.ner_f1,
            "ner_norm": self.ner_norm,
            "ner_token_accuracy": self.ner_token_accuracy,
            "counts": self.counts,
            "gold_fingerprint": self.gold_fingerprint,
        }
        if self.per_stratum:
            d["per_stratum"] = {k: v.to_dict() for k, v in self.per_stratum.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        sub = {
            k: cls.from_dict(v) for k, v in d.get("per_stratum", {}).items()
        }
        return cls(
            token_precision=d.get("token_precision", 0.0),
            token_recall=d.get("token_recall", 0.0),
            token_f1=d.get("token_f1", 0.0),
            pos_score=d.get("pos_score", 0.0),
            pos_norm=d.get("pos_norm"),
            lemma_accuracy=d.get("lemma_accuracy"),
            ner_f1=d.get("ner_f1"),
            ner_norm=d.get("ner_norm"),
            ner_token_accuracy=d.get("ner_token_accuracy"),
            counts=d.get("counts", {}),
            per_stratum=sub,
            gold_fingerprint=d.get("gold_fingerprint", ""),
        )


def gold_fingerprint(sentences) -> str:
    h = hashlib.sha256()
    for s in sorted(sentences, key=lambda x: x.id):
        h.update(s.id.encode("utf-8"))
        h.update(b"\x00")
        h.update(s.text.encode("utf-8"))
        h.update(b"\x01")
    return h.hexdigest()


class _Tally:
    def __init__(self):
        self.n_gold = 0
        self.n_pred = 0
        self.matched = 0
        self.pos_correct = 0
        self.lemma_pairs = 0
        self.lemma_correct = 0
        self.gold_entities = 0
        self.pred_entities = 0
        self.entity_matches = 0
        self.ner_token_correct = 0
        self.sentences = 0
        self.pred_iob_repairs = 0

    def report(self, profile: LanguageProfile) -> EvalReport:
        tp, tr, tf = prf_from_counts(self.matched, self.n_pred, self.n_gold)
        _, _, pos = prf_from_counts(self.pos_correct, self.n_pred, self.n_gold)
        r = EvalReport(
            token_precision=tp,
            token_recall=tr,
            token_f1=tf,
            pos_score=pos,
            pos_norm=normalized(pos, tf),
            counts={
                "sentences": self.sentences,
                "gold_tokens": self.n_gold,
                "pred_tokens": self.n_pred,
                "matched": self.matched,
                "gold_entities": self.gold_entities,
                "pred_entities": self.pred_entities,
                "pred_iob_repairs": self.pred_iob_repairs,
            },
        )
        if profile.requires_lemma:
            r.lemma_accuracy = (
                100.0 * self.lemma_correct / self.lemma_pairs if self.lemma_pairs else None
            )
        if profile.ner_typed:
            _, _, nf = prf_from_counts(
                self.entity_matches, self.pred_entities, self.gold_entities
            )
            r.ner_f1 = nf
            r.ner_norm = normalized(nf, tf)
            r.ner_token_accuracy = (
                100.0 * self.ner_token_correct / self.matched if self.matched else None
            )
        return r


def evaluate_corpus(
    gold: list[AnnotatedSentence],
    pred: list[AnnotatedSentence],
    profile: LanguageProfile,
    repair_pred_iob: bool = True,
) -> EvalReport:
    """Score a prediction corpus against gold, with per-stratum sub-reports.

    Sentences pair by id and must cover the same id set with identical texts.
    Gold IOB must be strictly valid; prediction IOB is repaired (counted in
    counts.pred_iob_repairs) unless repair_pred_iob is disabled.
    """
    gold_ids = [s.id for s in gold]
    pred_by_id = {s.id: s for s in pred}
    if len(pred_by_id) != len(pred):
        raise EvaluationError("duplicate sentence ids in predictions")
    missing = sorted(set(gold_ids) - set(pred_by_id))
    extra = sorted(set(pred_by_id) - set(gold_ids))
    if missing or extra:
        raise EvaluationError(
            f"gold/pred id mismatch: missing from pred {missing[:5]}, extra {extra[:5]}"
        )
    overall = _Tally()
    per_stratum: dict[str, _Tally] = {}
    for g in gold:
        p = pred_by_id[g.id]
        alignment = align_tokens(g, p)
        tallies = [overall, per_stratum.setdefault(g.period or "", _Tally())]
        g_entities = decode_entities(g) if profile.ner_typed else set()
        if profile.ner_typed:
            pairs = [(t.ent_iob, t.ent_type) for t in p.tokens]
            repaired, reports = repair_iob(pairs)
            if reports and not repair_pred_iob:
                raise EvaluationError(
                    f"sentence {p.id!r}: invalid prediction IOB and repair disabled"
                )
            p_entities = decode_entities(p, repair=True)
        else:
            reports = []
            p_entities = set()
        for t in tallies:
            t.sentences += 1
            t.n_gold += alignment.n_gold
            t.n_pred += alignment.n_pred
            t.matched += len(alignment.matched)
            t.pred_iob_repairs += len(reports)
            for gi, pj in alignment.matched:
                if g.tokens[gi].upos == p.tokens[pj].upos:
                    t.pos_correct += 1
                if profile.requires_lemma:
                    t.lemma_pairs += 1
                    if (g.tokens[gi].lemma or "") == (p.tokens[pj].lemma or ""):
                        t.lemma_correct += 1
                if profile.ner_typed:
                    if (g.tokens[gi].ent_iob, g.tokens[gi].ent_type) == (
                        p.tokens[pj].ent_iob,
                        p.tokens[pj].ent_type,
                    ):
                        t.ner_token_correct += 1
            t.gold_entities += len(g_entities)
            t.pred_entities += len(p_entities)
            t.entity_matches += len(g_entities & p_entities)
    report = overall.report(profile)
    report.per_stratum = {
        label: tally.report(profile) for label, tally in sorted(per_stratum.items())
    }
    report.gold_fingerprint = gold_fingerprint(gold)
    return report


# ---------------------------------------------------------------------------
# Adjudication accounting
# ---------------------------------------------------------------------------

ADJUDICATION_FIELDS = ("upos", "lemma", "ner")


@dataclass(frozen=True)
class Verdict:
    token_index: int
    field: str
    verdict: str  # "correct" | "error"
    correction: str | None = None


@dataclass(frozen=True)
class GoldAdjudication:
    sentence_id: str
    reviewer: str
    timestamp: str
    verdicts: tuple[Verdict, ...]

    def token_count(self) -> int:
        return len({v.token_index for v in self.verdicts})

    def error_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for v in self.verdicts:
            if v.verdict == "error":
                counts[v.field] = counts.get(v.field, 0) + 1
        return counts

    def to_dict(self) -> dict:
        return {
            "sentence_id": self.sentence_id,
            "reviewer": self.reviewer,
            "timestamp": self.timestamp,
            "verdicts": [
                {
                    "token_index": v.token_index,
                    "field": v.field,
                    "verdict": v.verdict,
                    "correction": v.correction,
                }
                for v in self.verdicts
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GoldAdjudication":
        return cls(
            sentence_id=d["sentence_id"],
            reviewer=d.get("reviewer", ""),
            timestamp=d.get("timestamp", ""),
            verdicts=tuple(
                Verdict(
                    token_index=v["token_index"],
                    field=v["field"],
                    verdict=v["verdict"],
                    correction=v.get("correction"),
                )
                for v in d["verdicts"]
            ),
        )


@dataclass
class AdjudicationTable:
    """Per-stratum and overall token counts, error counts, and accuracies."""

    rows: dict  # stratum -> {"tokens", "errors": {field: n}, "accuracy": {field: pct}}
    overall: dict
    fields: tuple[str, ...]
    pending: list[str]

    def total_errors(self) -> int:
        return sum(self.overall["errors"].values())


def adjudication_accuracy(
    adjudications: list[GoldAdjudication],
    strata: dict[str, str],
    fields: tuple[str, ...] = ("upos", "lemma"),
) -> AdjudicationTable:
    """Accuracy per stratum and overall: (tokens - field_errors) / tokens x 100.

    `strata` maps sentence id to its stratum label for every sentence that
    should be covered; ids without an adjudication are listed as pending and
    excluded from the accounting.
    """
    by_id = {a.sentence_id: a for a in adjudications}
    pending = sorted(sid for sid in strata if sid not in by_id)
    rows: dict[str, dict] = {}
    for sid, adj in by_id.items():
        if sid not in strata:
            raise EvaluationError(f"adjudicated sentence {sid!r} has no stratum")
        row = rows.setdefault(
            strata[sid], {"tokens": 0, "errors": {f: 0 for f in fields}}
        )
        row["tokens"] += adj.token_count()
        for f, n in adj.error_counts().items():
            if f in row["errors"]:
                row["errors"][f] += n
    overall = {"tokens": 0, "errors": {f: 0 for f in fields}}
    for row in rows.values():
        overall["tokens"] += row["tokens"]
        for f in fields:
            overall["errors"][f] += row["errors"][f]
    for row in list(rows.values()) + [overall]:
        tokens = row["tokens"]
        row["accuracy"] = {
            f: round2(100.0 * (tokens - row["errors"][f]) / tokens) if tokens else None
            for f in fields
        }
    return AdjudicationTable(
        rows=dict(sorted(rows.items())), overall=overall, fields=fields, pending=pending
    )


# ---------------------------------------------------------------------------
# Model comparison
# ---------------------------------------------------------------------------

_COMPARABLE = ("token_f1", "pos_score", "lemma_accuracy", "ner_f1")


@dataclass
class ModelComparison:
    label_a: str
    label_b: str
    rows: list  # dicts: {period, metric_a, metric_b, delta_metric, ...}

    def series(self) -> list[dict]:
        """Per-period POS series, one row per (period, model), for plotting."""
        out = []
        for row in self.rows:
            if row["period"] == "overall":
                continue
            out.append(
                {"period": row["period"], "model": self.label_a, "pos": row["pos_score_a"]}
            )
            out.append(
                {"period": row["period"], "model": self.label_b, "pos": row["pos_score_b"]}
            )
        return out


def compare_models(
    report_a: EvalReport,
    report_b: EvalReport,
    strata: list[str] | None = None,
    label_a: str = "model_a",
    label_b: str = "model_b",
) -> ModelComparison:
    """Side-by-side metrics with deltas (a minus b), per stratum and overall."""
    if (
        report_a.gold_fingerprint
        and report_b.gold_fingerprint
        and report_a.gold_fingerprint != report_b.gold_fingerprint
    ):
        raise EvaluationError("reports were not computed over the same gold set")
    if strata is None:
        strata = sorted(set(report_a.per_stratum) | set(report_b.per_stratum))
    unknown = [s for s in strata if s not in report_a.per_stratum or s not in report_b.per_stratum]
    if unknown:
        raise EvaluationError(f"strata missing from one report: {unknown}")
    rows = []
    pairs = [("overall", report_a, report_b)] + [
        (label, report_a.per_stratum[label], report_b.per_stratum[label])
        for label in strata
    ]
    for period, a, b in pairs:
        row: dict = {"period": period}
        for metric in _COMPARABLE:
            va, vb = getattr(a, metric), getattr(b, metric)
            row[f"{metric}_a"] = va
            row[f"{metric}_b"] = vb
            row[f"delta_{metric}"] = (
                va - vb if va is not None and vb is not None else None
            )
        rows.append(row)
    return ModelComparison(label_a=label_a, label_b=label_b, rows=rows)
