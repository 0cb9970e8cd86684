"""Small BiLSTM token classifier plus a count-based lemma lookup.

One tagger instance per task (UPOS, XPOS, NER). Deliberately tiny: the goal
is a deterministic, CPU-trainable stand-in for the large fine-tuned
pipelines, not their accuracy.
"""
from __future__ import annotations

import json
from collections import Counter
from pathlib import Path

import torch
from torch import nn

UNK = "<unk>"


class SequenceTagger(nn.Module):
    def __init__(self, vocab: list[str], labels: list[str], emb_dim=32, hidden=48):
        super().__init__()
        self.vocab = [UNK] + list(vocab)
        self.labels = list(labels)
        self.word_index = {w: i for i, w in enumerate(self.vocab)}
        self.embedding = nn.Embedding(len(self.vocab), emb_dim)
        self.lstm = nn.LSTM(
            emb_dim, hidden, batch_first=True, bidirectional=True
        )
        self.out = nn.Linear(2 * hidden, len(self.labels))

    def encode(self, forms: list[str]) -> torch.Tensor:
        return torch.tensor(
            [[self.word_index.get(w, 0) for w in forms]], dtype=torch.long
        )

    def forward(self, token_ids: torch.Tensor) -> torch.Tensor:
        emb = self.embedding(token_ids)
        hidden, _ = self.lstm(emb)
        return self.out(hidden)

    @torch.no_grad()
    def predict(self, forms: list[str]) -> list[str]:
        self.eval()
        logits = self(self.encode(forms))[0]
        return [self.labels[i] for i in logits.argmax(dim=-1).tolist()]

    def save(self, directory: Path, name: str) -> None:
        directory.mkdir(parents=True, exist_ok=True)
        torch.save(self.state_dict(), directory / f"{name}.pt")
        meta = {
            "vocab": self.vocab[1:],
            "labels": self.labels,
            "emb_dim": self.embedding.embedding_dim,
            "hidden": self.lstm.hidden_size,
        }
        with open(directory / f"{name}.json", "w", encoding="utf-8") as f:
            json.dump(meta, f, ensure_ascii=False)

    @classmethod
    def load(cls, directory: Path, name: str) -> "SequenceTagger":
        with open(directory / f"{name}.json", "r", encoding="utf-8") as f:
            meta = json.load(f)
        tagger = cls(
            meta["vocab"], meta["labels"], emb_dim=meta["emb_dim"], hidden=meta["hidden"]
        )
        tagger.load_state_dict(torch.load(directory / f"{name}.pt", weights_only=True))
        return tagger


class LemmaLookup:
    """(form, upos) -> most frequent lemma, falling back to form -> lemma,
    falling back to the form itself. Ties break lexicographically."""

    def __init__(self):
        self.by_pair: dict[str, str] = {}
        self.by_form: dict[str, str] = {}

    @staticmethod
    def _most_common(counter: Counter) -> str:
        best = max(counter.values())
        return sorted(lemma for lemma, n in counter.items() if n == best)[0]

    def fit(self, examples) -> "LemmaLookup":
        pair_counts: dict[str, Counter] = {}
        form_counts: dict[str, Counter] = {}
        for e in examples:
            for form, upos, lemma in zip(e.forms, e.upos, e.lemmas):
                if lemma is None:
                    continue
                pair_counts.setdefault(f"{form}\t{upos}", Counter())[lemma] += 1
                form_counts.setdefault(form, Counter())[lemma] += 1
        self.by_pair = {k: self._most_common(c) for k, c in pair_counts.items()}
        self.by_form = {k: self._most_common(c) for k, c in form_counts.items()}
        return self

    def lemma(self, form: str, upos: str) -> str:
        return self.by_pair.get(f"{form}\t{upos}") or self.by_form.get(form) or form

    def save(self, directory: Path) -> None:
        with open(directory / "lemmas.json", "w", encoding="utf-8") as f:
            json.dump(
                {"by_pair": self.by_pair, "by_form": self.by_form},
                f,
                ensure_ascii=False,
            )

    @classmethod
    def load(cls, directory: Path) -> "LemmaLookup":
        lookup = cls()
        with open(directory / "lemmas.json", "r", encoding="utf-8") as f:
            data = json.load(f)
        lookup.by_pair = data["by_pair"]
        lookup.by_form = data["by_form"]
        return lookup
