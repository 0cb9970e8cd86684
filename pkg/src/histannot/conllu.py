"""CoNLL-U export and import for annotated sentences.

Standard 10-column layout. FEATS/HEAD/DEPS are never populated (no
morphological features and no dependency structure are modeled); DEPREL
carries the stored opaque dep string. MISC carries NER=B-TYPE/I-TYPE spans
and SpaceAfter=No. Import is the exact inverse on files this module wrote;
it also accepts plain single-word-ID files from other taggers.
"""
from __future__ import annotations

from .schema import (
    AnnotatedSentence,
    LanguageProfile,
    OffsetMismatchError,
    Provenance,
    TokenAnnotation,
    get_profile,
    reconstruct_offsets,
)

COLUMNS = 10


class ConlluError(ValueError):
    """Malformed CoNLL-U input; messages carry 1-based line numbers."""


def _misc(ann: TokenAnnotation) -> str:
    parts = []
    if ann.ent_iob in ("B", "I"):
        if ann.ent_type:
            parts.append(f"NER={ann.ent_iob}-{ann.ent_type}")
        else:
            parts.append(f"NER={ann.ent_iob}")
    if not ann.token.trailing_space:
        parts.append("SpaceAfter=No")
    return "|".join(parts) if parts else "_"


def sentence_to_conllu(sentence: AnnotatedSentence) -> str:
    lines = [f"# sent_id = {sentence.id}", f"# text = {sentence.text}"]
    if sentence.period:
        lines.append(f"# period = {sentence.period}")
    for i, ann in enumerate(sentence.tokens, start=1):
        lines.append(
            "\t".join(
                [
                    str(i),
                    ann.token.text,
                    ann.lemma if ann.lemma is not None else "_",
                    ann.upos,
                    ann.xpos,
                    "_",
                    "_",
                    ann.dep if ann.dep is not None else "_",
                    "_",
                    _misc(ann),
                ]
            )
        )
    lines.append("")
    return "\n".join(lines)


def export_conllu(sentences, destination) -> None:
    with open(destination, "w", encoding="utf-8") as f:
        for s in sentences:
            f.write(sentence_to_conllu(s))
            f.write("\n")


def _parse_misc(misc: str, lineno: int) -> tuple[str, str, bool | None]:
    """Returns (ent_iob, ent_type, space_after) from a MISC cell.

    space_after is False for an explicit SpaceAfter=No, else None (unstated).
    Unknown attributes from foreign files are ignored.
    """
    iob, etype, space = "O", "", None
    if misc == "_":
        return iob, etype, space
    for part in misc.split("|"):
        if part == "SpaceAfter=No":
            space = False
        elif part.startswith("NER="):
            value = part[4:]
            if "-" in value:
                iob, etype = value.split("-", 1)
            else:
                iob, etype = value, ""
            if iob not in ("B", "I"):
                raise ConlluError(f"line {lineno}: bad NER value {value!r}")
    return iob, etype, space


def parse_conllu(text: str, language: str) -> list[AnnotatedSentence]:
    profile = get_profile(language)
    sentences = []
    block: list[tuple[int, str]] = []
    comments: dict[str, str] = {}

    def flush(end_line: int):
        nonlocal block, comments
        if not block:
            comments = {}
            return
        sentences.append(_build_sentence(block, comments, profile, end_line))
        block = []
        comments = {}

    lineno = 0
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if not line.strip():
            flush(lineno)
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, value = body.split("=", 1)
                comments[key.strip()] = value.strip()
            continue
        block.append((lineno, line))
    flush(lineno + 1)
    return sentences


def _build_sentence(
    block: list[tuple[int, str]],
    comments: dict[str, str],
    profile: LanguageProfile,
    end_line: int,
) -> AnnotatedSentence:
    first_line = block[0][0]
    sent_id = comments.get("sent_id")
    text = comments.get("text")
    if sent_id is None:
        raise ConlluError(f"line {first_line}: sentence has no sent_id comment")
    if text is None:
        raise ConlluError(f"line {first_line}: sentence has no text comment")
    rows = []
    for lineno, line in block:
        cols = line.split("\t")
        if len(cols) != COLUMNS:
            raise ConlluError(
                f"line {lineno}: expected {COLUMNS} tab-separated columns, got {len(cols)}"
            )
        rows.append((lineno, cols))
    expected_id = 0
    parsed = []
    for lineno, cols in rows:
        expected_id += 1
        if not cols[0].isdigit() or int(cols[0]) != expected_id:
            raise ConlluError(
                f"line {lineno}: token id {cols[0]!r} is not the expected integer "
                f"{expected_id} (ranges/empty nodes are not supported)"
            )
        if not cols[1]:
            raise ConlluError(f"line {lineno}: empty FORM")
        iob, etype, space = _parse_misc(cols[9], lineno)
        parsed.append(
            {
                "lineno": lineno,
                "form": cols[1],
                "lemma": None if cols[2] == "_" else cols[2],
                "upos": cols[3],
                "xpos": cols[4],
                "dep": None if cols[7] == "_" else cols[7],
                "ent_iob": iob,
                "ent_type": etype,
                "space_after": space,
            }
        )
    forms = [p["form"] for p in parsed]
    try:
        offsets = reconstruct_offsets(text, forms, profile)
    except OffsetMismatchError as e:
        raise ConlluError(
            f"line {first_line}: token forms do not reconstruct the text comment ({e})"
        ) from e
    tokens = []
    for p, tok in zip(parsed, offsets):
        if p["space_after"] is False and tok.trailing_space:
            raise ConlluError(
                f"line {p['lineno']}: SpaceAfter=No contradicts the sentence text"
            )
        tokens.append(
            TokenAnnotation(
                token=tok,
                upos=p["upos"],
                xpos=p["xpos"],
                lemma=p["lemma"],
                dep=p["dep"],
                ent_iob=p["ent_iob"],
                ent_type=p["ent_type"],
            )
        )
    return AnnotatedSentence(
        id=sent_id,
        text=text,
        language=profile.language,
        period=comments.get("period", ""),
        tokens=tuple(tokens),
        provenance=Provenance(),
    )


def import_conllu(path, language: str) -> list[AnnotatedSentence]:
    with open(path, "r", encoding="utf-8") as f:
        return parse_conllu(f.read(), language)
