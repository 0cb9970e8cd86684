"""Tag raw sentences and emit evaluator-ready CoNLL-U predictions."""
from __future__ import annotations

import json
from pathlib import Path

from .conllu_io import Sentence, TokenRow, write_conllu
from .corpus import CorpusError
from .model import LemmaLookup
from .train import TaggerBundle

PUNCT = ".,;:!?«»()\"'"


class PredictError(ValueError):
    pass


def tokenize_whitespace(text: str) -> list[tuple[str, bool]]:
    """(token, space_after) pairs; trailing punctuation split off."""
    out: list[tuple[str, bool]] = []
    chunks = text.split(" ")
    for ci, chunk in enumerate(chunks):
        if not chunk:
            raise PredictError(f"cannot tokenize {text!r}: double space")
        core = chunk
        tail = []
        while len(core) > 1 and core[-1] in PUNCT:
            tail.append(core[-1])
            core = core[:-1]
        pieces = [core] + list(reversed(tail))
        for pi, piece in enumerate(pieces):
            last_piece = pi == len(pieces) - 1
            space = last_piece and ci < len(chunks) - 1
            out.append((piece, space))
    return out


def tokenize_greedy(text: str, vocab: set[str], max_len: int) -> list[tuple[str, bool]]:
    """Longest-match segmentation over the training vocabulary."""
    out = []
    i = 0
    while i < len(text):
        match = None
        for width in range(min(max_len, len(text) - i), 1, -1):
            if text[i : i + width] in vocab:
                match = text[i : i + width]
                break
        if match is None:
            match = text[i]
        out.append((match, False))
        i += len(match)
    return out


def tokenize(text: str, bundle: TaggerBundle) -> list[tuple[str, bool]]:
    if not text:
        raise PredictError("empty sentence")
    if bundle.profile == "french":
        if "\n" in text:
            raise PredictError("sentence contains a line break")
        return tokenize_whitespace(text)
    if " " in text:
        raise PredictError(
            "whitespace in chinese input: tokenizer/profile mismatch"
        )
    vocab = set(bundle.vocab)
    max_len = max((len(w) for w in vocab), default=1)
    return tokenize_greedy(text, vocab, max_len)


def repair_iob_labels(labels: list[str]) -> list[str]:
    """Rewrite orphan I-* to B-* so emitted sequences are always IOB2-valid."""
    out: list[str] = []
    for i, label in enumerate(labels):
        if label.startswith("I"):
            prev = out[i - 1] if i else "O"
            etype = label.split("-", 1)[1] if "-" in label else ""
            prev_type = prev.split("-", 1)[1] if "-" in prev else ""
            if prev == "O" or prev_type != etype:
                out.append(f"B-{etype}" if etype else "B")
                continue
        out.append(label)
    return out


def predict_records(bundle: TaggerBundle, records: list[dict]) -> list[Sentence]:
    """records: dicts with id, text, and optional period."""
    sentences = []
    for record in records:
        pairs = tokenize(record["text"], bundle)
        forms = [form for form, _ in pairs]
        upos = bundle.taggers["upos"].predict(forms)
        xpos = bundle.taggers["xpos"].predict(forms)
        ner = ["O"] * len(forms)
        if "ner" in bundle.taggers:
            ner = repair_iob_labels(bundle.taggers["ner"].predict(forms))
        lemmas: list[str | None] = [None] * len(forms)
        if bundle.lemmas is not None:
            lemmas = [bundle.lemmas.lemma(f, u) for f, u in zip(forms, upos)]
        tokens = []
        for i, (form, space) in enumerate(pairs):
            iob, etype = "O", ""
            if ner[i] != "O":
                iob, etype = (ner[i].split("-", 1) + [""])[:2]
            tokens.append(
                TokenRow(
                    form=form,
                    lemma=lemmas[i],
                    upos=upos[i],
                    xpos=xpos[i],
                    ent_iob=iob,
                    ent_type=etype,
                    space_after=space,
                )
            )
        sentences.append(
            Sentence(
                sent_id=record["id"],
                text=record["text"],
                period=record.get("period", ""),
                tokens=tokens,
            )
        )
    return sentences


def read_records(path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def predict_file(model_dir: str | Path, in_path, out_path) -> int:
    bundle = TaggerBundle.load(model_dir)
    records = read_records(in_path)
    if not records:
        raise CorpusError(f"{in_path}: no input records")
    sentences = predict_records(bundle, records)
    write_conllu(sentences, out_path)
    return len(sentences)
