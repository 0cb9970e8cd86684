"""Adjudication service: sample review sentences, collect verdicts, export gold.

Sessions are file-backed (one directory per session: a JSON descriptor, a
sentence snapshot, and an append-only verdict log with latest-wins
resolution). The HTTP layer is a thin FastAPI app over ReviewStore; the
browser UI is served as a static bundle.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

from .corpus import seeded_take
from .evaluation import (
    AdjudicationTable,
    GoldAdjudication,
    Verdict,
    adjudication_accuracy,
)
from .schema import (
    AnnotatedSentence,
    LanguageProfile,
    get_profile,
    read_sentences,
    sentence_to_dict,
    validate_iob,
)

_NER_CORRECTION = re.compile(r"^(O|[BI]-[A-Z_]+)$")


class ReviewError(ValueError):
    """Validation failure on session input; carries field-level messages."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


class NotFound(KeyError):
    pass


@dataclass(frozen=True)
class ReviewSession:
    id: str
    language: str
    seed: int
    per_stratum: int
    sample: tuple[dict, ...]  # {"sentence_id", "stratum"} in review order

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "language": self.language,
            "seed": self.seed,
            "per_stratum": self.per_stratum,
            "sample": list(self.sample),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReviewSession":
        return cls(
            id=d["id"],
            language=d["language"],
            seed=d["seed"],
            per_stratum=d["per_stratum"],
            sample=tuple(d["sample"]),
        )


def draw_review_sample(
    sentences: list[AnnotatedSentence], per_stratum: int, seed: int
) -> list[AnnotatedSentence]:
    """Deterministic seeded sample of per_stratum sentences from each stratum."""
    strata: dict[str, dict[str, AnnotatedSentence]] = {}
    for s in sentences:
        strata.setdefault(s.period or "", {})[s.id] = s
    too_small = [
        f"stratum {label!r} has {len(members)} sentences, fewer than {per_stratum}"
        for label, members in sorted(strata.items())
        if len(members) < per_stratum
    ]
    if too_small:
        raise ReviewError(too_small)
    out = []
    for label in sorted(strata):
        members = strata[label]
        for sid in seeded_take(members.keys(), seed, label, per_stratum):
            out.append(members[sid])
    return out


class ReviewStore:
    """File-backed session storage under one data directory."""

    def __init__(self, session_dir: str | Path):
        self.root = Path(session_dir)
        self.root.mkdir(parents=True, exist_ok=True)

    # -- paths -------------------------------------------------------------

    def _dir(self, session_id: str) -> Path:
        return self.root / session_id

    def _require(self, session_id: str) -> Path:
        d = self._dir(session_id)
        if not (d / "session.json").exists():
            raise NotFound(f"session {session_id!r} not found")
        return d

    # -- session lifecycle ---------------------------------------------------

    def create_session(
        self,
        sentences: list[AnnotatedSentence],
        per_stratum: int,
        seed: int,
        session_id: str | None = None,
    ) -> ReviewSession:
        if not sentences:
            raise ReviewError(["no sentences to sample from"])
        if per_stratum < 1:
            raise ReviewError(["per_stratum must be >= 1"])
        languages = {s.language for s in sentences}
        if len(languages) != 1:
            raise ReviewError([f"mixed languages in partition: {sorted(languages)}"])
        sample = draw_review_sample(sentences, per_stratum, seed)
        if session_id is None:
            h = hashlib.blake2b(digest_size=5)
            h.update(str(seed).encode())
            for s in sample:
                h.update(s.id.encode())
            session_id = f"rev-{h.hexdigest()}"
        session = ReviewSession(
            id=session_id,
            language=languages.pop(),
            seed=seed,
            per_stratum=per_stratum,
            sample=tuple(
                {"sentence_id": s.id, "stratum": s.period} for s in sample
            ),
        )
        d = self._dir(session_id)
        d.mkdir(parents=True, exist_ok=True)
        with open(d / "session.json", "w", encoding="utf-8") as f:
            json.dump(session.to_dict(), f, ensure_ascii=False, indent=2, sort_keys=True)
        with open(d / "sentences.jsonl", "w", encoding="utf-8") as f:
            for s in sample:
                f.write(json.dumps(sentence_to_dict(s), ensure_ascii=False, sort_keys=True))
                f.write("\n")
        (d / "adjudications.jsonl").touch()
        return session

    def get_session(self, session_id: str) -> ReviewSession:
        d = self._require(session_id)
        with open(d / "session.json", "r", encoding="utf-8") as f:
            return ReviewSession.from_dict(json.load(f))

    def sentences(self, session_id: str) -> dict[str, AnnotatedSentence]:
        d = self._require(session_id)
        return {s.id: s for s in read_sentences(d / "sentences.jsonl")}

    def adjudications(self, session_id: str) -> dict[str, GoldAdjudication]:
        """Latest complete adjudication per sentence (append-only log underneath)."""
        d = self._require(session_id)
        latest: dict[str, GoldAdjudication] = {}
        with open(d / "adjudications.jsonl", "r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    adj = GoldAdjudication.from_dict(json.loads(line))
                    latest[adj.sentence_id] = adj
        return latest

    def status(self, session_id: str) -> dict:
        session = self.get_session(session_id)
        done = set(self.adjudications(session_id))
        per_stratum: dict[str, dict] = {}
        for item in session.sample:
            row = per_stratum.setdefault(
                item["stratum"], {"total": 0, "adjudicated": 0}
            )
            row["total"] += 1
            if item["sentence_id"] in done:
                row["adjudicated"] += 1
        return {
            "id": session.id,
            "language": session.language,
            "per_stratum": session.per_stratum,
            "sample": [
                {
                    **item,
                    "status": "adjudicated"
                    if item["sentence_id"] in done
                    else "pending",
                }
                for item in session.sample
            ],
            "progress": dict(sorted(per_stratum.items())),
            "adjudicated": len(done),
            "total": len(session.sample),
        }

    # -- sentence payloads ---------------------------------------------------

    def sentence_payload(self, session_id: str, sentence_id: str) -> dict:
        session = self.get_session(session_id)
        sentences = self.sentences(session_id)
        if sentence_id not in sentences:
            raise NotFound(f"sentence {sentence_id!r} not in session")
        profile = get_profile(session.language)
        sentence = sentences[sentence_id]
        adj = self.adjudications(session_id).get(sentence_id)
        return {
            "sentence": sentence_to_dict(sentence),
            "language": session.language,
            "fields": list(profile.adjudication_fields),
            "inventories": {
                "upos": sorted(profile.upos_inventory),
                "xpos": sorted(profile.xpos_inventory),
                "ner": sorted(profile.ner_inventory),
            },
            "status": "adjudicated" if adj else "pending",
            "adjudication": adj.to_dict() if adj else None,
        }

    # -- verdict submission ----------------------------------------------------

    def _validate_adjudication(
        self,
        sentence: AnnotatedSentence,
        profile: LanguageProfile,
        adjudication: GoldAdjudication,
    ) -> list[str]:
        errors = []
        n = len(sentence.tokens)
        required = {
            (i, f) for i in range(n) for f in profile.adjudication_fields
        }
        seen = set()
        for v in adjudication.verdicts:
            key = (v.token_index, v.field)
            if v.token_index < 0 or v.token_index >= n:
                errors.append(f"token index {v.token_index} out of range")
                continue
            if v.field not in profile.adjudication_fields:
                errors.append(f"field {v.field!r} not adjudicated for {profile.language}")
                continue
            if key in seen:
                errors.append(f"duplicate verdict for token {v.token_index} field {v.field}")
                continue
            seen.add(key)
            if v.verdict not in ("correct", "error"):
                errors.append(f"token {v.token_index}: bad verdict {v.verdict!r}")
            if v.verdict == "correct" and v.correction:
                errors.append(
                    f"token {v.token_index}: correction given with verdict 'correct'"
                )
            if v.correction is not None:
                errors.extend(
                    self._check_correction(v, profile)
                )
        missing = required - seen
        if missing:
            preview = sorted(missing)[:5]
            errors.append(f"missing verdicts for (token, field): {preview}")
        if not errors:
            corrected = apply_corrections(sentence, adjudication, profile)
            iob_problems = validate_iob(corrected.tokens)
            errors.extend(
                f"corrections break the entity sequence: {p}" for p in iob_problems
            )
        return errors

    @staticmethod
    def _check_correction(v: Verdict, profile: LanguageProfile) -> list[str]:
        if v.field == "upos":
            if v.correction not in profile.upos_inventory:
                return [f"token {v.token_index}: upos correction {v.correction!r} not in inventory"]
        elif v.field == "lemma":
            if not v.correction:
                return [f"token {v.token_index}: empty lemma correction"]
        elif v.field == "ner":
            if not _NER_CORRECTION.match(v.correction or ""):
                return [f"token {v.token_index}: ner correction {v.correction!r} must be O or B-TYPE/I-TYPE"]
            if v.correction != "O":
                etype = v.correction.split("-", 1)[1]
                if etype not in profile.ner_inventory:
                    return [f"token {v.token_index}: ner type {etype!r} not in inventory"]
        return []

    def submit_adjudication(self, session_id: str, payload: dict) -> dict:
        session = self.get_session(session_id)
        profile = get_profile(session.language)
        sentences = self.sentences(session_id)
        try:
            adjudication = GoldAdjudication.from_dict(payload)
        except (KeyError, TypeError) as e:
            raise ReviewError([f"malformed adjudication payload: {e}"]) from e
        if adjudication.sentence_id not in sentences:
            raise NotFound(f"sentence {adjudication.sentence_id!r} not in session")
        if not adjudication.timestamp:
            adjudication = replace(
                adjudication, timestamp=datetime.now(timezone.utc).isoformat()
            )
        errors = self._validate_adjudication(
            sentences[adjudication.sentence_id], profile, adjudication
        )
        if errors:
            raise ReviewError(errors)
        d = self._require(session_id)
        with open(d / "adjudications.jsonl", "a", encoding="utf-8") as f:
            f.write(json.dumps(adjudication.to_dict(), ensure_ascii=False, sort_keys=True))
            f.write("\n")
        return {"ok": True, "sentence_id": adjudication.sentence_id}

    # -- export ---------------------------------------------------------------

    def export_gold(
        self, session_id: str, partial: bool = False
    ) -> tuple[list[AnnotatedSentence], AdjudicationTable]:
        session = self.get_session(session_id)
        profile = get_profile(session.language)
        sentences = self.sentences(session_id)
        adjudications = self.adjudications(session_id)
        pending = [
            item["sentence_id"]
            for item in session.sample
            if item["sentence_id"] not in adjudications
        ]
        if pending and not partial:
            raise ReviewError(
                [f"{len(pending)} sentence(s) still pending; pass partial to export anyway"]
            )
        gold = []
        for item in session.sample:
            sid = item["sentence_id"]
            if sid not in adjudications:
                continue
            gold.append(apply_corrections(sentences[sid], adjudications[sid], profile))
        strata = {
            item["sentence_id"]: item["stratum"]
            for item in session.sample
            if item["sentence_id"] in adjudications
        }
        table = adjudication_accuracy(
            list(adjudications.values()), strata, fields=profile.adjudication_fields
        )
        table.pending = pending
        return gold, table


def apply_corrections(
    sentence: AnnotatedSentence,
    adjudication: GoldAdjudication,
    profile: LanguageProfile,
) -> AnnotatedSentence:
    """Pure function: original annotations with reviewer corrections applied."""
    tokens = list(sentence.tokens)
    for v in adjudication.verdicts:
        if v.verdict != "error" or v.correction is None:
            continue
        ann = tokens[v.token_index]
        if v.field == "upos":
            ann = replace(ann, upos=v.correction)
        elif v.field == "lemma":
            ann = replace(ann, lemma=v.correction)
        elif v.field == "ner":
            if v.correction == "O":
                ann = replace(ann, ent_iob="O", ent_type="")
            else:
                iob, etype = v.correction.split("-", 1)
                ann = replace(ann, ent_iob=iob, ent_type=etype)
        tokens[v.token_index] = ann
    return replace(sentence, tokens=tuple(tokens))


# ---------------------------------------------------------------------------
# HTTP app
# ---------------------------------------------------------------------------

def create_app(store: ReviewStore, ui_dir: str | Path | None = None):
    from fastapi import Body, FastAPI, HTTPException
    from fastapi.staticfiles import StaticFiles

    app = FastAPI(title="histannot review service")

    @app.post("/sessions")
    def create_session(body: dict = Body(...)):
        path = body.get("partition_path")
        if not path or not Path(path).exists():
            raise HTTPException(422, detail=[f"partition_path {path!r} does not exist"])
        try:
            session = store.create_session(
                read_sentences(path),
                per_stratum=int(body.get("per_stratum", 20)),
                seed=int(body.get("seed", 0)),
                session_id=body.get("session_id"),
            )
        except ReviewError as e:
            raise HTTPException(422, detail=e.errors)
        return store.status(session.id)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        try:
            return store.status(session_id)
        except NotFound as e:
            raise HTTPException(404, detail=str(e))

    @app.get("/sessions/{session_id}/sentences/{sentence_id}")
    def get_sentence(session_id: str, sentence_id: str):
        try:
            return store.sentence_payload(session_id, sentence_id)
        except NotFound as e:
            raise HTTPException(404, detail=str(e))

    @app.post("/sessions/{session_id}/adjudications")
    def submit(session_id: str, body: dict = Body(...)):
        try:
            ack = store.submit_adjudication(session_id, body)
        except NotFound as e:
            raise HTTPException(404, detail=str(e))
        except ReviewError as e:
            raise HTTPException(422, detail=e.errors)
        return {**ack, "status": store.status(session_id)}

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str, partial: bool = False):
        try:
            gold, table = store.export_gold(session_id, partial=partial)
        except NotFound as e:
            raise HTTPException(404, detail=str(e))
        except ReviewError as e:
            raise HTTPException(422, detail=e.errors)
        return {
            "gold": [sentence_to_dict(s) for s in gold],
            "summary": {
                "rows": table.rows,
                "overall": table.overall,
                "fields": list(table.fields),
                "pending": table.pending,
                "total_errors": table.total_errors(),
            },
        }

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app


def serve(session_dir: str, port: int = 8000, ui_dir: str | None = None) -> None:
    import uvicorn

    app = create_app(ReviewStore(session_dir), ui_dir=ui_dir)
    uvicorn.run(app, host="127.0.0.1", port=port)
