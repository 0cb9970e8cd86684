"""Reader/writer for the 10-column CoNLL-U exchange format.

Only the fields the pipeline exchange uses are modeled: FORM, LEMMA, UPOS,
XPOS, DEPREL (opaque), NER-in-MISC, and SpaceAfter=No. The writer emits
sentence comments (sent_id, text, period) and MISC in the same order the
annotation exporter uses, so evaluator-side imports see a familiar file.
"""
from __future__ import annotations

from dataclasses import dataclass, field


class ConlluIOError(ValueError):
    """Unparsable CoNLL-U input; message carries the 1-based line number."""


@dataclass
class TokenRow:
    form: str
    lemma: str | None = None
    upos: str = "_"
    xpos: str = "_"
    dep: str | None = None
    ent_iob: str = "O"
    ent_type: str = ""
    space_after: bool = True


@dataclass
class Sentence:
    sent_id: str
    text: str
    period: str = ""
    tokens: list[TokenRow] = field(default_factory=list)


def _misc(tok: TokenRow) -> str:
    parts = []
    if tok.ent_iob in ("B", "I"):
        parts.append(
            f"NER={tok.ent_iob}-{tok.ent_type}" if tok.ent_type else f"NER={tok.ent_iob}"
        )
    if not tok.space_after:
        parts.append("SpaceAfter=No")
    return "|".join(parts) if parts else "_"


def write_conllu(sentences: list[Sentence], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for s in sentences:
            f.write(f"# sent_id = {s.sent_id}\n")
            f.write(f"# text = {s.text}\n")
            if s.period:
                f.write(f"# period = {s.period}\n")
            for i, tok in enumerate(s.tokens, start=1):
                f.write(
                    "\t".join(
                        [
                            str(i),
                            tok.form,
                            tok.lemma if tok.lemma is not None else "_",
                            tok.upos,
                            tok.xpos,
                            "_",
                            "_",
                            tok.dep if tok.dep is not None else "_",
                            "_",
                            _misc(tok),
                        ]
                    )
                    + "\n"
                )
            f.write("\n")


def read_conllu(path) -> list[Sentence]:
    sentences: list[Sentence] = []
    current: Sentence | None = None
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                if current is not None and current.tokens:
                    sentences.append(current)
                current = None
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" not in body:
                    continue
                key, value = (p.strip() for p in body.split("=", 1))
                if current is None:
                    current = Sentence(sent_id="", text="")
                if key == "sent_id":
                    current.sent_id = value
                elif key == "text":
                    current.text = value
                elif key == "period":
                    current.period = value
                continue
            if current is None:
                current = Sentence(sent_id="", text="")
            cols = line.split("\t")
            if len(cols) != 10:
                raise ConlluIOError(f"line {lineno}: expected 10 columns, got {len(cols)}")
            if not cols[0].isdigit():
                raise ConlluIOError(f"line {lineno}: unsupported token id {cols[0]!r}")
            if int(cols[0]) != len(current.tokens) + 1:
                raise ConlluIOError(f"line {lineno}: token ids must count 1..n")
            iob, etype, space = "O", "", True
            if cols[9] != "_":
                for part in cols[9].split("|"):
                    if part == "SpaceAfter=No":
                        space = False
                    elif part.startswith("NER="):
                        value = part[4:]
                        iob, etype = (value.split("-", 1) + [""])[:2]
            current.tokens.append(
                TokenRow(
                    form=cols[1],
                    lemma=None if cols[2] == "_" else cols[2],
                    upos=cols[3],
                    xpos=cols[4],
                    dep=None if cols[7] == "_" else cols[7],
                    ent_iob=iob,
                    ent_type=etype,
                    space_after=space,
                )
            )
    if current is not None and current.tokens:
        sentences.append(current)
    for s in sentences:
        if not s.sent_id or not s.text:
            raise ConlluIOError(f"sentence missing sent_id/text comments: {s.sent_id!r}")
    return sentences
