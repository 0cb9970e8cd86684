"""Convert exchanged CoNLL-U corpora into training artifacts, losslessly."""
from __future__ import annotations

from dataclasses import dataclass, field

from .conllu_io import Sentence, TokenRow, read_conllu, write_conllu

FRENCH_COMPONENTS = ("upos", "xpos", "lemma")
CHINESE_COMPONENTS = ("upos", "xpos", "ner")


class CorpusError(ValueError):
    pass


def components_for(profile: str) -> tuple[str, ...]:
    if profile == "french":
        return FRENCH_COMPONENTS
    if profile == "chinese":
        return CHINESE_COMPONENTS
    raise CorpusError(f"unknown profile {profile!r}")


@dataclass
class Example:
    sent_id: str
    text: str
    period: str
    forms: list[str]
    upos: list[str]
    xpos: list[str]
    lemmas: list[str | None]
    ner: list[str]  # "O" or "B-TYPE"/"I-TYPE"
    space_after: list[bool]

    def to_sentence(self) -> Sentence:
        tokens = []
        for i, form in enumerate(self.forms):
            iob, etype = "O", ""
            if self.ner[i] != "O":
                iob, etype = self.ner[i].split("-", 1)
            tokens.append(
                TokenRow(
                    form=form,
                    lemma=self.lemmas[i],
                    upos=self.upos[i],
                    xpos=self.xpos[i],
                    dep=None,
                    ent_iob=iob,
                    ent_type=etype,
                    space_after=self.space_after[i],
                )
            )
        return Sentence(
            sent_id=self.sent_id, text=self.text, period=self.period, tokens=tokens
        )


@dataclass
class Corpus:
    profile: str
    examples: list[Example]

    def token_count(self) -> int:
        return sum(len(e.forms) for e in self.examples)

    def label_set(self, task: str) -> list[str]:
        labels = set()
        for e in self.examples:
            labels.update(getattr(e, "ner" if task == "ner" else task))
        return sorted(labels)

    def vocabulary(self) -> list[str]:
        vocab = set()
        for e in self.examples:
            vocab.update(e.forms)
        return sorted(vocab)


def _example(sentence: Sentence) -> Example:
    ner = []
    for tok in sentence.tokens:
        if tok.ent_iob == "O":
            ner.append("O")
        else:
            ner.append(f"{tok.ent_iob}-{tok.ent_type}" if tok.ent_type else tok.ent_iob)
    return Example(
        sent_id=sentence.sent_id,
        text=sentence.text,
        period=sentence.period,
        forms=[t.form for t in sentence.tokens],
        upos=[t.upos for t in sentence.tokens],
        xpos=[t.xpos for t in sentence.tokens],
        lemmas=[t.lemma for t in sentence.tokens],
        ner=ner,
        space_after=[t.space_after for t in sentence.tokens],
    )


def convert_corpus(path, profile: str) -> tuple[Corpus, dict]:
    """Read one CoNLL-U file into training examples plus a conversion report.

    The report counts must match the source exactly; the conversion is
    lossless over FORM/LEMMA/UPOS/XPOS/NER so examples can be written back
    for a field-by-field diff.
    """
    components_for(profile)
    sentences = read_conllu(path)
    if not sentences:
        raise CorpusError(f"{path}: no sentences")
    corpus = Corpus(profile=profile, examples=[_example(s) for s in sentences])
    report = {
        "path": str(path),
        "sentences": len(corpus.examples),
        "tokens": corpus.token_count(),
    }
    return corpus, report


def write_corpus(corpus: Corpus, path) -> None:
    """Round-trip writer used by the conversion diff check."""
    write_conllu([e.to_sentence() for e in corpus.examples], path)


def check_disjoint(train: Corpus, dev: Corpus) -> None:
    """Train and dev must not share sentence ids."""
    overlap = {e.sent_id for e in train.examples} & {e.sent_id for e in dev.examples}
    if overlap:
        raise CorpusError(
            f"train and dev share {len(overlap)} sentence id(s), e.g. {sorted(overlap)[:3]}"
        )
