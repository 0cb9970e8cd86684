"""Period-labeled corpus store with deterministic stratified sampling.

Input is line-delimited JSON, one record per line: {id, text, date, source}.
Strata are computed at ingestion from the configured granularity; sampling
uses a per-stratum seed derived from (global seed, stratum label) so adding
a stratum never perturbs the draw of the others.
"""
from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field

CENTURY = "century"
DECADE = "decade"

_CENTURY_LABEL = re.compile(r"^(\d{1,4})-(\d{1,4})$")


class CorpusError(ValueError):
    """Raised on malformed corpus input; carries one message per bad line."""

    def __init__(self, issues: list[str]):
        super().__init__("; ".join(issues))
        self.issues = issues


@dataclass(frozen=True)
class CorpusRecord:
    id: str
    text: str
    date: int | str
    source: str = ""
    period: str = ""

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "date": self.date,
            "source": self.source,
            "period": self.period,
        }


@dataclass(frozen=True)
class Stratum:
    label: str
    granularity: str
    members: tuple[str, ...]


@dataclass(frozen=True)
class SampleSpec:
    per_stratum_count: int
    seed: int
    granularity: str

    def __post_init__(self):
        if self.per_stratum_count <= 0:
            raise CorpusError(["per_stratum_count must be positive"])
        if self.granularity not in (CENTURY, DECADE):
            raise CorpusError([f"unknown granularity {self.granularity!r}"])


@dataclass
class CorpusStore:
    granularity: str
    records: dict[str, CorpusRecord] = field(default_factory=dict)
    strata: dict[str, Stratum] = field(default_factory=dict)

    def stratum_sizes(self) -> dict[str, int]:
        return {label: len(s.members) for label, s in sorted(self.strata.items())}


def period_label(date: int | str, granularity: str) -> str:
    """Resolve a year or explicit label to exactly one stratum label.

    Centuries use [floor(y/100)*100, +100) labeled "1600-1700"; decades use
    [floor(y/10)*10, +10) labeled "1920-1929". Boundary years go down via
    floor (a work dated exactly 1600 lands in 1600-1700).
    """
    if isinstance(date, int):
        year = date
    else:
        text = str(date).strip()
        if re.fullmatch(r"\d{1,4}", text):
            year = int(text)
        else:
            m = _CENTURY_LABEL.fullmatch(text)
            if m is None:
                raise ValueError(f"unparsable date {date!r}")
            lo, hi = int(m.group(1)), int(m.group(2))
            if granularity == CENTURY and lo % 100 == 0 and hi == lo + 100:
                return text
            if granularity == DECADE and lo % 10 == 0 and hi == lo + 9:
                return text
            raise ValueError(
                f"period label {date!r} does not match {granularity} grammar"
            )
    if granularity == CENTURY:
        start = (year // 100) * 100
        return f"{start}-{start + 100}"
    start = (year // 10) * 10
    return f"{start}-{start + 9}"


def ingest_corpus(lines, granularity: str, strict: bool = True) -> CorpusStore | tuple[CorpusStore, list[str]]:
    """Build a store from line-delimited JSON records.

    `lines` is any iterable of strings (an open file works). Malformed lines
    are reported with their 1-based line numbers; in strict mode any issue
    raises CorpusError with the complete list, otherwise the issues are
    returned alongside the partial store.
    """
    if granularity not in (CENTURY, DECADE):
        raise CorpusError([f"unknown granularity {granularity!r}"])
    store = CorpusStore(granularity=granularity)
    members: dict[str, list[str]] = {}
    issues: list[str] = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as e:
            issues.append(f"line {lineno}: invalid JSON ({e.msg})")
            continue
        problems = []
        rid = raw.get("id")
        text = raw.get("text")
        date = raw.get("date")
        if not rid or not isinstance(rid, str):
            problems.append("missing or non-string id")
        elif rid in store.records:
            problems.append(f"duplicate id {rid!r}")
        if not text or not isinstance(text, str):
            problems.append("empty text")
        elif "\n" in text or "\r" in text:
            problems.append("text contains line breaks")
        label = None
        if date is None:
            problems.append("missing date")
        else:
            try:
                label = period_label(date, granularity)
            except ValueError as e:
                problems.append(str(e))
        if problems:
            issues.extend(f"line {lineno}: {p}" for p in problems)
            continue
        record = CorpusRecord(
            id=rid, text=text, date=date, source=raw.get("source", ""), period=label
        )
        store.records[rid] = record
        members.setdefault(label, []).append(rid)
    for label, ids in members.items():
        store.strata[label] = Stratum(
            label=label, granularity=granularity, members=tuple(ids)
        )
    if issues and strict:
        raise CorpusError(issues)
    if strict:
        return store
    return store, issues


def derive_stratum_seed(seed: int, label: str) -> int:
    """Stable 64-bit stream seed for one stratum, split from the global seed."""
    digest = hashlib.blake2b(
        f"{seed}:{label}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


def seeded_take(ids, seed: int, label: str, count: int) -> list[str]:
    """Shuffle ids with the stratum's derived seed and take the first `count`."""
    pool = sorted(ids)
    rng = random.Random(derive_stratum_seed(seed, label))
    rng.shuffle(pool)
    return pool[:count]


def stratified_sample(store: CorpusStore, spec: SampleSpec) -> list[CorpusRecord]:
    """Draw exactly per_stratum_count records from every stratum, deterministically."""
    if spec.granularity != store.granularity:
        raise CorpusError(
            [f"spec granularity {spec.granularity!r} != store granularity {store.granularity!r}"]
        )
    too_small = [
        f"stratum {label!r} has {len(s.members)} records, fewer than {spec.per_stratum_count}"
        for label, s in sorted(store.strata.items())
        if len(s.members) < spec.per_stratum_count
    ]
    if too_small:
        raise CorpusError(too_small)
    out: list[CorpusRecord] = []
    for label in sorted(store.strata):
        chosen = seeded_take(
            store.strata[label].members, spec.seed, label, spec.per_stratum_count
        )
        out.extend(store.records[rid] for rid in chosen)
    return out


def write_records(path, records) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r.to_dict(), ensure_ascii=False, sort_keys=True))
            f.write("\n")


def read_records(path) -> list[CorpusRecord]:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            out.append(
                CorpusRecord(
                    id=d["id"],
                    text=d["text"],
                    date=d["date"],
                    source=d.get("source", ""),
                    period=d.get("period", ""),
                )
            )
    return out
