"""Toy corpus generator: deterministic word->tag language the tagger can learn."""
from __future__ import annotations

import json
import random

from trainer_adapter.conllu_io import Sentence, TokenRow, write_conllu

NOUNS = [f"nom{i}" for i in range(15)]
VERBS = [f"verbe{i}" for i in range(10)]
ADVS = [f"adv{i}" for i in range(6)]
ADJS = [f"adj{i}" for i in range(6)]


def lemma_of(form: str, upos: str) -> str:
    if upos == "VERB":
        return form + "r"
    if upos == "DET":
        return "le"
    return form


def toy_sentence(i: int, rng: random.Random) -> Sentence:
    det = rng.choice(["le", "la"])
    noun = rng.choice(NOUNS)
    verb = rng.choice(VERBS)
    tail = rng.choice(ADVS + ADJS)
    tail_upos = "ADV" if tail.startswith("adv") else "ADJ"
    tail_xpos = "ADV" if tail.startswith("adv") else "ADJ"
    words = [
        (det, "DET", "DET"),
        (noun, "NOUN", "NC"),
        (verb, "VERB", "V"),
        (tail, tail_upos, tail_xpos),
        (".", "PUNCT", "PONCT"),
    ]
    text = " ".join(w for w, _, _ in words)
    period = "1600-1700" if i % 2 == 0 else "1700-1800"
    tokens = []
    for j, (form, upos, xpos) in enumerate(words):
        tokens.append(
            TokenRow(
                form=form,
                lemma=lemma_of(form, upos),
                upos=upos,
                xpos=xpos,
                space_after=j < len(words) - 1,
            )
        )
    return Sentence(sent_id=f"toy{i:04d}", text=text, period=period, tokens=tokens)


def make_toy_corpus(path, n: int, seed: int = 1, start: int = 0) -> list[Sentence]:
    rng = random.Random(seed)
    sentences = [toy_sentence(start + i, rng) for i in range(n)]
    write_conllu(sentences, path)
    return sentences


def write_raw_records(path, sentences: list[Sentence]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for s in sentences:
            f.write(
                json.dumps(
                    {"id": s.sent_id, "text": s.text, "period": s.period},
                    ensure_ascii=False,
                )
                + "\n"
            )
