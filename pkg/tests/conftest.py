"""Shared builders for synthetic corpora and annotated sentences."""
from __future__ import annotations

import json
import random

import pytest

from histannot.corpus import CorpusRecord
from histannot.driver import load_template, parse_response, render_prompt
from histannot.providers import MockProvider
from histannot.schema import (
    AnnotatedSentence,
    Token,
    TokenAnnotation,
    get_profile,
    reconstruct_offsets,
)

FRENCH_WORDS = ["chat", "chien", "maison", "roi", "ville", "livre", "mot"]
FRENCH_VERBS = ["dort", "mange", "parle", "va"]


@pytest.fixture(scope="session")
def french():
    return get_profile("french")


@pytest.fixture(scope="session")
def chinese():
    return get_profile("chinese")


def french_corpus_lines(n: int, n_strata: int = 2, start_century: int = 1600):
    """Synthetic sentence records; record i carries index i in its text."""
    lines = []
    for i in range(n):
        year = start_century + (i % n_strata) * 100 + (i % 7)
        word = FRENCH_WORDS[i % len(FRENCH_WORDS)]
        verb = FRENCH_VERBS[i % len(FRENCH_VERBS)]
        text = f"Le {word} {i:04d} ne {verb} pas ."
        lines.append(
            json.dumps(
                {"id": f"s{i:04d}", "text": text, "date": year, "source": "synth"},
                ensure_ascii=False,
            )
        )
    return lines


def french_records(n: int, n_strata: int = 2) -> list[CorpusRecord]:
    """Records with index i embedded in the text; strata assigned in blocks
    so every stratum covers all index residues evenly."""
    records = []
    for i in range(n):
        century = 1600 + (i * n_strata // n) * 100
        word = FRENCH_WORDS[i % len(FRENCH_WORDS)]
        records.append(
            CorpusRecord(
                id=f"s{i:04d}",
                text=f"Le {word} {i:04d} ne dort pas .",
                date=century + 20,
                source="synth",
                period=f"{century}-{century + 100}",
            )
        )
    return records


def mock_annotate(record: CorpusRecord, language: str) -> AnnotatedSentence:
    """Closed-loop: render, call the mock, strictly parse."""
    profile = get_profile(language)
    template = load_template(language)
    provider = MockProvider(profile, template.body)
    raw = provider.annotate(render_prompt(template, record.text), 0.0)
    return parse_response(
        raw,
        profile,
        sentence_id=record.id,
        sentence_text=record.text,
        period=record.period,
    )


CHINESE_TEXTS = [
    "七點鐘他去上海。",
    "他看書了。",
    "此人去北京。",
    "國民黨有三人。",
    "我說上海大。",
    "他寫書，去東京。",
]


def generated_sentences(n: int, language: str = "french") -> list[AnnotatedSentence]:
    """n schema-valid sentences produced through the mock provider."""
    out = []
    if language == "french":
        for i, r in enumerate(french_records(n)):
            out.append(mock_annotate(r, "french"))
    else:
        for i in range(n):
            decade = 1900 + (i % 3) * 10
            record = CorpusRecord(
                id=f"z{i:04d}",
                text=CHINESE_TEXTS[i % len(CHINESE_TEXTS)],
                date=decade + 3,
                source="synth",
                period=f"{decade}-{decade + 9}",
            )
            out.append(mock_annotate(record, "chinese"))
    return out


def build_sentence(
    sid: str,
    text: str,
    token_texts: list[str],
    upos: list[str],
    xpos: list[str],
    language: str = "chinese",
    lemmas: list[str] | None = None,
    ents: list[tuple[str, str]] | None = None,
    period: str = "",
) -> AnnotatedSentence:
    """Hand-build a sentence; offsets come from reconstruction."""
    profile = get_profile(language)
    tokens = reconstruct_offsets(text, token_texts, profile)
    anns = []
    for i, tok in enumerate(tokens):
        iob, etype = ents[i] if ents else ("O", "")
        anns.append(
            TokenAnnotation(
                token=tok,
                upos=upos[i],
                xpos=xpos[i],
                lemma=lemmas[i] if lemmas else None,
                dep=None,
                ent_iob=iob,
                ent_type=etype,
            )
        )
    return AnnotatedSentence(
        id=sid, text=text, language=language, period=period, tokens=tuple(anns)
    )


def random_segmentation(rng: random.Random, text: str) -> list[str]:
    """Random cut of `text` into 1..len(text) contiguous non-empty pieces."""
    n = len(text)
    k = rng.randint(0, n - 1)
    cuts = sorted(rng.sample(range(1, n), k)) if k else []
    bounds = [0] + cuts + [n]
    return [text[a:b] for a, b in zip(bounds, bounds[1:])]


def random_iob(rng: random.Random, n: int, types: list[str]) -> list[tuple[str, str]]:
    """A random strictly-valid IOB2 labeling of n tokens."""
    out: list[tuple[str, str]] = []
    i = 0
    while i < n:
        if rng.random() < 0.4:
            etype = rng.choice(types)
            out.append(("B", etype))
            i += 1
            while i < n and rng.random() < 0.5:
                out.append(("I", etype))
                i += 1
        else:
            out.append(("O", ""))
            i += 1
    return out
