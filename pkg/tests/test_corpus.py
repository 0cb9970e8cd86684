"""Ingestion, stratum arithmetic, and deterministic stratified sampling."""
from __future__ import annotations

import hashlib
import json
import random

import pytest

from histannot.corpus import (
    CorpusError,
    SampleSpec,
    ingest_corpus,
    period_label,
    stratified_sample,
)

from conftest import french_corpus_lines


def record_line(rid, text="Il dort .", date=1642, **extra):
    return json.dumps({"id": rid, "text": text, "date": date, "source": "t", **extra})


class TestPeriodLabel:
    def test_century_arithmetic(self):
        assert period_label(1642, "century") == "1600-1700"

    def test_decade_arithmetic(self):
        assert period_label(1923, "decade") == "1920-1929"

    def test_boundary_year_floors_down(self):
        assert period_label(1600, "century") == "1600-1700"
        assert period_label(1920, "decade") == "1920-1929"

    def test_explicit_labels_accepted_verbatim(self):
        assert period_label("1500-1600", "century") == "1500-1600"
        assert period_label("1920-1929", "decade") == "1920-1929"

    def test_label_wrong_granularity_rejected(self):
        with pytest.raises(ValueError):
            period_label("1500-1600", "decade")
        with pytest.raises(ValueError):
            period_label("1920-1929", "century")

    def test_garbage_date_rejected(self):
        with pytest.raises(ValueError):
            period_label("seventeenth", "century")


class TestIngest:
    def test_strata_assignment(self):
        store = ingest_corpus(
            [record_line("a1", date=1642), record_line("z1", date=1923)], "century"
        )
        assert store.records["a1"].period == "1600-1700"
        assert set(store.strata) == {"1600-1700", "1900-2000"}

    def test_decade_granularity(self):
        store = ingest_corpus([record_line("z1", date=1923)], "decade")
        assert store.records["z1"].period == "1920-1929"

    def test_duplicate_id_names_offender(self):
        with pytest.raises(CorpusError) as e:
            ingest_corpus([record_line("a1"), record_line("a1")], "century")
        assert "a1" in str(e.value) and "line 2" in str(e.value)

    def test_malformed_lines_reported_with_line_numbers(self):
        lines = [
            record_line("ok1"),
            "not json at all",
            record_line("ok2", text=""),
            record_line("ok3", date="not-a-year"),
        ]
        store, issues = ingest_corpus(lines, "century", strict=False)
        assert set(store.records) == {"ok1"}
        assert len(issues) == 3
        assert any("line 2" in i for i in issues)
        assert any("line 3" in i and "empty text" in i for i in issues)
        assert any("line 4" in i and "unparsable" in i for i in issues)

    def test_text_with_newline_rejected(self):
        with pytest.raises(CorpusError):
            ingest_corpus([record_line("a1", text="two\nlines")], "century")

    def test_partition_property(self):
        store = ingest_corpus(french_corpus_lines(50, n_strata=3), "century")
        seen = {}
        for label, stratum in store.strata.items():
            for rid in stratum.members:
                assert rid not in seen, "record in two strata"
                seen[rid] = label
        assert set(seen) == set(store.records)
        for rid, label in seen.items():
            assert store.records[rid].period == label


def oracle_take(ids, seed, label, count):
    """Reference sampler: blake2b-derived stream seed, shuffle sorted ids, take."""
    digest = hashlib.blake2b(f"{seed}:{label}".encode("utf-8"), digest_size=8).digest()
    rng = random.Random(int.from_bytes(digest, "big"))
    pool = sorted(ids)
    rng.shuffle(pool)
    return pool[:count]


class TestStratifiedSample:
    def make_store(self, sizes, granularity="century"):
        lines = []
        i = 0
        for s, n in enumerate(sizes):
            for _ in range(n):
                lines.append(record_line(f"r{i:05d}", date=1500 + 100 * s))
                i += 1
        return ingest_corpus(lines, granularity)

    def test_five_strata_paper_scale(self):
        # 5 strata x 11,000 per stratum = 55,000 records
        store = self.make_store([11_000] * 5)
        spec = SampleSpec(per_stratum_count=11_000, seed=42, granularity="century")
        assert len(stratified_sample(store, spec)) == 55_000

    def test_determinism(self):
        store = self.make_store([30, 30])
        spec = SampleSpec(per_stratum_count=10, seed=9, granularity="century")
        a = [r.id for r in stratified_sample(store, spec)]
        b = [r.id for r in stratified_sample(store, spec)]
        assert a == b

    def test_matches_reference_shuffle_oracle(self):
        store = self.make_store([10, 10])
        spec = SampleSpec(per_stratum_count=4, seed=7, granularity="century")
        sampled = stratified_sample(store, spec)
        assert len(sampled) == 8
        by_stratum = {}
        for r in sampled:
            by_stratum.setdefault(r.period, []).append(r.id)
        assert all(len(ids) == 4 for ids in by_stratum.values())
        for label, stratum in store.strata.items():
            expected = oracle_take(stratum.members, 7, label, 4)
            assert by_stratum[label] == expected

    def test_no_duplicates_and_balance(self):
        store = self.make_store([25, 40, 31])
        spec = SampleSpec(per_stratum_count=20, seed=1, granularity="century")
        sampled = stratified_sample(store, spec)
        ids = [r.id for r in sampled]
        assert len(ids) == len(set(ids)) == 60

    def test_stratum_too_small(self):
        store = self.make_store([10, 3])
        spec = SampleSpec(per_stratum_count=5, seed=0, granularity="century")
        with pytest.raises(CorpusError) as e:
            stratified_sample(store, spec)
        assert "fewer than 5" in str(e.value)

    def test_adding_stratum_does_not_perturb_others(self):
        # splittable per-stratum seeds: a new stratum leaves others untouched
        small = self.make_store([12, 12])
        big = self.make_store([12, 12, 12])
        spec = SampleSpec(per_stratum_count=6, seed=3, granularity="century")
        take_small = {
            r.period: [x.id for x in stratified_sample(small, spec) if x.period == r.period]
            for r in stratified_sample(small, spec)
        }
        take_big = {
            r.period: [x.id for x in stratified_sample(big, spec) if x.period == r.period]
            for r in stratified_sample(big, spec)
        }
        for label, ids in take_small.items():
            assert take_big[label] == ids
