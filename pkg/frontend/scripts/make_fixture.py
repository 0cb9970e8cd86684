#!/usr/bin/env python3
"""Regenerate tests/fixtures/planted.json from live review-service payloads.

Run from the frontend directory with the histannot package installed:
    python scripts/make_fixture.py
The fixture mirrors the service JSON exactly, so the UI tests exercise the
same bytes a browser session would see.
"""
from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from histannot.review import ReviewStore, create_app
from histannot.schema import write_sentences

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "tests"))
from conftest import generated_sentences  # noqa: E402
from test_secondary_review import plant_errors  # noqa: E402


def main() -> None:
    out_path = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "planted.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        tmp_path = Path(tmp)
        originals = generated_sentences(10, "french")
        perturbed, plants = plant_errors(originals)
        partition = tmp_path / "test.jsonl"
        write_sentences(partition, perturbed)
        client = TestClient(create_app(ReviewStore(tmp_path / "sessions")))
        session = client.post(
            "/sessions",
            json={"partition_path": str(partition), "per_stratum": 5, "seed": 3},
        ).json()
        payloads = {}
        for item in session["sample"]:
            sid = item["sentence_id"]
            payloads[sid] = client.get(
                f"/sessions/{session['id']}/sentences/{sid}"
            ).json()
        fixture = {
            "session": session,
            "payloads": payloads,
            "plants": {
                sid: {"token_index": k, "field": field, "correction": value}
                for sid, (k, field, value) in plants.items()
            },
        }
    out_path.write_text(
        json.dumps(fixture, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {out_path}")


if __name__ == "__main__":
    main()
