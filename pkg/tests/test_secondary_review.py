"""Planted-error review flow: the service-side half of the UI workflow.

Ten sentences with 7 planted POS errors and 3 planted lemma errors are
adjudicated through the same HTTP calls the browser UI makes; the exported
summary must count exactly those errors and the exported gold must pass
every validator and feed the evaluator cleanly.
"""
from __future__ import annotations

from dataclasses import replace

import pytest
from fastapi.testclient import TestClient

from histannot.evaluation import evaluate_corpus
from histannot.review import ReviewStore, create_app
from histannot.schema import get_profile, validate_sentence, write_sentences

from conftest import generated_sentences

french = get_profile("french")


def plant_errors(sentences):
    """Flip 7 upos and 3 lemma values; return (perturbed, plants).

    plants: {sentence_id: (token_index, field, correct_value)}
    """
    perturbed = []
    plants = {}
    for n, sentence in enumerate(sentences):
        tokens = list(sentence.tokens)
        k = n % len(tokens)
        if n < 7:
            original = tokens[k].upos
            tokens[k] = replace(tokens[k], upos="X" if original != "X" else "NOUN")
            plants[sentence.id] = (k, "upos", original)
        else:
            original = tokens[k].lemma
            tokens[k] = replace(tokens[k], lemma=original + "~")
            plants[sentence.id] = (k, "lemma", original)
        perturbed.append(replace(sentence, tokens=tuple(tokens)))
    return perturbed, plants


def reviewer_verdicts(payload, plant):
    """Full verdict set: everything correct except the planted error."""
    k, field, correction = plant
    verdicts = []
    for i in range(len(payload["sentence"]["tokens"])):
        for f in payload["fields"]:
            if (i, f) == (k, field):
                verdicts.append(
                    {"token_index": i, "field": f, "verdict": "error", "correction": correction}
                )
            else:
                verdicts.append({"token_index": i, "field": f, "verdict": "correct"})
    return verdicts


def test_planted_error_review_flow(tmp_path):
    originals = generated_sentences(10, "french")
    perturbed, plants = plant_errors(originals)
    partition = tmp_path / "test.jsonl"
    write_sentences(partition, perturbed)

    store = ReviewStore(tmp_path / "sessions")
    client = TestClient(create_app(store))
    session = client.post(
        "/sessions",
        json={"partition_path": str(partition), "per_stratum": 5, "seed": 3},
    ).json()
    assert len(session["sample"]) == 10

    for item in session["sample"]:
        sid = item["sentence_id"]
        payload = client.get(f"/sessions/{session['id']}/sentences/{sid}").json()
        response = client.post(
            f"/sessions/{session['id']}/adjudications",
            json={
                "sentence_id": sid,
                "reviewer": "r1",
                "verdicts": reviewer_verdicts(payload, plants[sid]),
            },
        )
        assert response.status_code == 200, response.text

    exported = client.get(f"/sessions/{session['id']}/export").json()
    summary = exported["summary"]
    assert summary["overall"]["errors"] == {"upos": 7, "lemma": 3}
    assert summary["total_errors"] == 10
    assert summary["pending"] == []

    # corrections restore the pre-plant originals exactly
    gold, table = store.export_gold(session["id"])
    by_id = {s.id: s for s in originals}
    for sentence in gold:
        assert sentence == by_id[sentence.id]
        assert validate_sentence(sentence, french) == []

    # re-export is idempotent: gold is a pure function of annotations+verdicts
    gold_again, table_again = store.export_gold(session["id"])
    assert gold_again == gold
    assert table_again.overall == table.overall

    # the exported gold feeds evaluation without schema errors
    report = evaluate_corpus(gold, gold, french)
    assert report.token_f1 == 100.0 and report.pos_score == 100.0
    print(
        "PASS  review flow: planted 7 POS + 3 lemma errors adjudicated; "
        "summary counts exact; gold feeds evaluation cleanly"
    )
