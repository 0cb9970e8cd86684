"""Acceptance suite: one test per release criterion, at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one pass line per
criterion.
"""
from __future__ import annotations

import hashlib
import json
import random
import time
from dataclasses import replace
from pathlib import Path

import pytest

from histannot.builder import SplitSpec, stratified_split
from histannot.conllu import export_conllu, import_conllu
from histannot.driver import agreement_disagreement
from histannot.evaluation import (
    EvalReport,
    GoldAdjudication,
    Verdict,
    adjudication_accuracy,
    align_tokens,
    compare_models,
    ner_f1,
    normalized,
    pos_score,
    round2,
    token_f1,
)
from histannot.pipeline import config_from_dict, run_stage, validate_exports, verify_manifest_chain
from histannot.schema import (
    OffsetMismatchError,
    get_profile,
    join_tokens,
    read_sentences,
    reconstruct_offsets,
    validate_sentence,
)

from conftest import build_sentence, french_corpus_lines, generated_sentences
from test_evaluation import oracle_entity_spans, oracle_prf, random_sentence_pair

french = get_profile("french")
chinese = get_profile("chinese")


def ok(line: str) -> None:
    print(f"PASS  {line}")


class TestNormalizedScoreReproduction:
    # (token F1, raw metric) -> published normalized value
    POS_CASES = [
        (75.10, 67.75, 90.21),
        (75.10, 72.33, 96.31),
        (82.02, 72.77, 88.72),
        (82.02, 76.94, 93.81),
        (89.93, 71.70, 79.73),
        (89.93, 77.63, 86.32),
    ]
    NER_CASES = [
        (75.10, 33.44, 44.53),
        (75.10, 43.98, 58.56),
        (82.02, 41.82, 50.99),
        (82.02, 53.60, 65.35),
    ]

    def test_normalized_scores(self):
        for tf, metric, expected in self.POS_CASES + self.NER_CASES:
            got = normalized(metric, tf)
            assert got == pytest.approx(expected, abs=0.01), (metric, tf)
        ok(
            "normalized-score reproduction: all 6 POS_Norm and 4 NER_Norm "
            "figures within ±0.01"
        )


def bulk_adjudication(sid, n_tokens, errors_by_field, fields):
    verdicts = []
    for i in range(n_tokens):
        for f in fields:
            bad = i < errors_by_field.get(f, 0)
            verdicts.append(
                Verdict(token_index=i, field=f, verdict="error" if bad else "correct")
            )
    return GoldAdjudication(
        sentence_id=sid, reviewer="r", timestamp="t", verdicts=tuple(verdicts)
    )


class TestAdjudicationAccounting:
    def test_chinese_pos_accuracy(self):
        adj = bulk_adjudication("z", 1807, {"upos": 19, "ner": 12}, ("upos", "ner"))
        table = adjudication_accuracy([adj], {"z": "all"}, fields=("upos", "ner"))
        assert table.overall["accuracy"]["upos"] == pytest.approx(98.95, abs=0.01)

    def test_french_back_solved_counts(self):
        rows = [
            ("1500-1600", 762, 16, 14),
            ("1600-1700", 759, 26, 15),
            ("1700-1800", 631, 19, 8),
            ("1800-1900", 709, 39, 15),
            ("1900-2000", 656, 24, 19),
        ]
        adjudications, strata = [], {}
        for label, tokens, pos_err, lemma_err in rows:
            sid = f"s-{label}"
            adjudications.append(
                bulk_adjudication(sid, tokens, {"upos": pos_err, "lemma": lemma_err}, ("upos", "lemma"))
            )
            strata[sid] = label
        table = adjudication_accuracy(adjudications, strata)
        assert table.overall["tokens"] == 3517
        assert table.overall["errors"]["upos"] == 124
        assert table.overall["errors"]["lemma"] == 71
        assert table.total_errors() == 195
        assert table.overall["accuracy"]["upos"] == pytest.approx(96.47, abs=0.01)
        assert table.overall["accuracy"]["lemma"] == pytest.approx(97.98, abs=0.01)
        ok(
            "adjudication accounting: 98.95 (1,807/19), 96.47/97.98 over 3,517 "
            "tokens, error sum 195"
        )


class TestComparisonDeltas:
    A = {
        "1500-1600": (95.54, 93.44),
        "1600-1700": (96.05, 96.44),
        "1700-1800": (95.72, 97.78),
        "1800-1900": (95.06, 98.03),
        "1900-2000": (93.90, 96.80),
    }
    B = {
        "1500-1600": (89.37, 79.53),
        "1600-1700": (93.02, 84.19),
        "1700-1800": (93.19, 92.87),
        "1800-1900": (95.35, 95.77),
        "1900-2000": (92.84, 96.04),
    }

    @staticmethod
    def report(pos, lemma, per_stratum):
        return EvalReport(
            token_f1=100.0,
            pos_score=pos,
            lemma_accuracy=lemma,
            per_stratum={
                k: EvalReport(token_f1=100.0, pos_score=p, lemma_accuracy=l)
                for k, (p, l) in per_stratum.items()
            },
            gold_fingerprint="fixed",
        )

    def test_published_deltas(self):
        cmp = compare_models(
            self.report(95.28, 96.42, self.A),
            self.report(92.69, 89.28, self.B),
            label_a="historic",
            label_b="baseline",
        )
        rows = {r["period"]: r for r in cmp.rows}
        assert rows["overall"]["delta_pos_score"] == pytest.approx(2.59, abs=0.01)
        assert rows["overall"]["delta_lemma_accuracy"] == pytest.approx(7.14, abs=0.01)
        assert rows["1500-1600"]["delta_pos_score"] == pytest.approx(6.17, abs=0.01)
        assert rows["1500-1600"]["delta_lemma_accuracy"] == pytest.approx(13.91, abs=0.01)
        ok("comparison deltas: +2.59/+7.14 overall, +6.17/+13.91 for 1500-1600")


class TestOracleEquivalence:
    def test_500_randomized_pairs(self):
        rng = random.Random(555)
        start = time.perf_counter()
        n_cases = 520
        for _ in range(n_cases):
            g, p = random_sentence_pair(rng, rng.randint(1, 12))
            alignment = align_tokens(g, p)
            g_spans = {t.token.span for t in g.tokens}
            p_spans = {t.token.span for t in p.tokens}
            tf = token_f1(alignment)
            assert (tf["precision"], tf["recall"], tf["f1"]) == oracle_prf(
                len(g_spans & p_spans), len(p_spans), len(g_spans)
            )
            g_tags = {(t.token.span, t.upos) for t in g.tokens}
            p_tags = {(t.token.span, t.upos) for t in p.tokens}
            assert pos_score(g, p, alignment) == oracle_prf(
                len(g_tags & p_tags), len(p_tags), len(g_tags)
            )[2]
            g_ents = oracle_entity_spans(g)
            p_ents = oracle_entity_spans(p)
            assert ner_f1(g, p) == oracle_prf(
                len(g_ents & p_ents), len(p_ents), len(g_ents)
            )[2]
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0
        ok(
            f"oracle equivalence: {n_cases} randomized pairs exactly match "
            f"brute-force set intersections in {elapsed:.2f}s"
        )


MUTABLE_FIELDS = {
    "french": ("text", "upos", "xpos", "lemma", "dep", "ent_iob"),
    "chinese": ("text", "upos", "xpos", "ent_iob", "ent_type"),
}

ALTERNATIVES = {
    "upos": ("NOUN", "X"),
    "xpos": {"french": ("NC", "X"), "chinese": ("NN", "X")},
    "lemma": ("autre", "chose"),
    "dep": ("root", "obj"),
    "ent_iob": ("O", "B"),
    "ent_type": ("GPE", "PERSON"),
}


def mutate(sentence, k, field):
    ann = sentence.tokens[k]
    if field == "text":
        new_token = replace(ann.token, text=ann.token.text + "X")
        ann = replace(ann, token=new_token)
    else:
        alts = ALTERNATIVES[field]
        if isinstance(alts, dict):
            alts = alts[sentence.language]
        current = getattr(ann, field)
        ann = replace(ann, **{field: alts[0] if current != alts[0] else alts[1]})
    tokens = list(sentence.tokens)
    tokens[k] = ann
    return replace(sentence, tokens=tuple(tokens))


class TestAgreementFilterProperty:
    def test_mutation_suite(self):
        sentences = generated_sentences(20, "french") + generated_sentences(
            20, "chinese"
        )
        cases = 0
        for s in sentences:
            assert agreement_disagreement([s, s]) is None  # kept <= deep equality
            for field in MUTABLE_FIELDS[s.language]:
                k = cases % len(s.tokens)
                mutated = mutate(s, k, field)
                reason = agreement_disagreement([s, mutated])
                assert reason is not None, (s.id, field)
                assert agreement_disagreement([mutated, s]) is not None
                cases += 1
        assert cases >= 200
        ok(
            f"agreement filter: kept iff field-wise deep equality; "
            f"{cases} single-field mutations all discarded"
        )


class TestSplitProperties:
    def test_thousand_sentence_corpus(self):
        sizes = {"1500-1600": 313, "1600-1700": 207, "1700-1800": 180,
                 "1800-1900": 150, "1900-2000": 150}
        sentences = []
        i = 0
        for label, n in sizes.items():
            for _ in range(n):
                sentences.append(
                    build_sentence(
                        f"s{i:04d}", "Il dort .", ["Il", "dort", "."],
                        ["PRON", "VERB", "PUNCT"], ["CLS", "V", "PONCT"],
                        language="french", lemmas=["il", "dormir", "."], period=label,
                    )
                )
                i += 1
        assert len(sentences) == 1000
        spec = SplitSpec(seed=23)
        start = time.perf_counter()
        splits, warnings = stratified_split(sentences, spec)
        again, _ = stratified_split(sentences, spec)
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0
        assert splits == again  # deterministic under seed
        all_ids = [s.id for part in splits.values() for s in part]
        assert sorted(all_ids) == sorted(s.id for s in sentences)  # disjoint+exhaustive
        assert len(set(all_ids)) == 1000
        for label, n in sizes.items():
            n_dev = sum(1 for s in splits["dev"] if s.period == label)
            n_test = sum(1 for s in splits["test"] if s.period == label)
            n_train = sum(1 for s in splits["train"] if s.period == label)
            assert n_dev == int(n * 0.1) and n_test == int(n * 0.1)
            assert n_train == n - n_dev - n_test
        ok(
            f"split properties: disjoint/exhaustive, exact floor sizes, "
            f"deterministic; 1,000 sentences in {elapsed:.3f}s"
        )


class TestRoundTrips:
    def test_conllu_round_trip_100_sentences(self, tmp_path):
        for language, count in (("french", 50), ("chinese", 50)):
            sentences = generated_sentences(count, language)
            a, b = tmp_path / f"{language}_a.conllu", tmp_path / f"{language}_b.conllu"
            export_conllu(sentences, a)
            export_conllu(import_conllu(a, language), b)
            assert a.read_bytes() == b.read_bytes()
        ok("round trip: CoNLL-U export -> import -> export byte-identical on 100 sentences")

    def test_offset_invariant_and_mutated_fixtures(self):
        accepted = generated_sentences(30, "french") + generated_sentences(30, "chinese")
        for s in accepted:
            assert join_tokens([t.token for t in s.tokens]) == s.text
            assert validate_sentence(s, get_profile(s.language)) == []
        rejected = 0
        for s in accepted[:20]:
            texts = s.token_texts()
            profile = get_profile(s.language)
            mutations = [
                texts[:-1],                             # dropped token
                texts + [texts[-1]],                    # extra token
                [texts[0] + "X"] + texts[1:],           # corrupted surface
                list(reversed(texts)) if len(texts) > 1 else texts + ["X"],
            ]
            for mutated in mutations:
                try:
                    tokens = reconstruct_offsets(s.text, mutated, profile)
                except OffsetMismatchError:
                    rejected += 1
                else:
                    # reordering identical tokens can still align; the round
                    # trip then must still hold, otherwise it is a failure
                    assert join_tokens(tokens) == s.text
        assert rejected >= 75
        ok(
            f"round trip: offset invariant holds for 60 accepted sentences; "
            f"{rejected} mutated fixtures rejected"
        )


class TestEndToEndMockPipeline:
    def test_pipeline_on_200_sentences(self, tmp_path):
        corpus = tmp_path / "corpus.jsonl"
        corpus.write_text(
            "\n".join(french_corpus_lines(200, n_strata=2)) + "\n", encoding="utf-8"
        )
        config = config_from_dict(
            {
                "profile": "french",
                "corpus": str(corpus),
                "out_dir": str(tmp_path / "out"),
                "sampling": {"granularity": "century", "per_stratum": 100, "seed": 7},
                "provider": {
                    "kind": "mock",
                    "temperatures": [0.1, 0.7],
                    "concurrency": 8,
                    "disagree": {"lt": 3, "mod": 20, "temperature": 0.7},
                },
                "split": {"seed": 11},
            }
        )
        start = time.perf_counter()
        for stage in ("sample", "annotate", "build", "split", "export", "evaluate"):
            run_stage(stage, config)
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0

        out = tmp_path / "out"
        sampled_ids = {
            json.loads(line)["id"]
            for line in (out / "sampled.jsonl").read_text().strip().splitlines()
        }
        kept_ids = {s.id for s in read_sentences(out / "annotated.jsonl")}
        discard_ids = {
            json.loads(line)["id"]
            for line in (out / "discards.jsonl").read_text().strip().splitlines()
        }
        assert kept_ids | discard_ids == sampled_ids
        assert kept_ids & discard_ids == set()
        assert len(sampled_ids) == 200
        assert len(discard_ids) == 30  # 15% configured disagreement

        assert validate_exports(config) == []
        assert verify_manifest_chain(out) == []
        ok(
            f"end-to-end mock pipeline: 200 sentences, 2 strata, 15% disagreement, "
            f"kept+discarded partition input, all exports valid, {elapsed:.2f}s"
        )
