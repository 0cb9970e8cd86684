"""Annotation providers: the abstract interface, an HTTP client, and a mock.

The mock is a dictionary-plus-rules annotator with a configurable
per-temperature perturbation table. It is fully deterministic, which lets the
whole pipeline run closed-loop in tests and offline environments.
"""
from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from typing import Callable

import httpx

from .schema import LanguageProfile

FRENCH_PUNCT = ".,;:!?«»()\"'"
CHINESE_PUNCT = "。，、？！：；「」《》〈〉<>()（）"

MOCK_TIMESTAMP = "1970-01-01T00:00:00+00:00"


class ProviderError(RuntimeError):
    """Transport- or configuration-level provider failure."""


class AnnotationProvider:
    """One annotation call: prompt in, raw response text out.

    A conforming mock is deterministic for identical (prompt, temperature);
    real providers need not be.
    """

    model_id: str = "unknown"
    supports_temperature: bool = True

    def annotate(self, prompt: str, temperature: float) -> str:
        raise NotImplementedError

    def provenance_timestamp(self) -> str:
        return datetime.now(timezone.utc).isoformat()


class HttpChatProvider(AnnotationProvider):
    """Minimal client for chat-completion style HTTP annotation APIs.

    Credentials come from the environment variable named in the pipeline
    config; the key itself never appears in configs or manifests.
    """

    def __init__(
        self,
        model_id: str,
        base_url: str,
        credentials_env: str | None = None,
        api_key: str | None = None,
        timeout: float = 120.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.model_id = model_id
        self.base_url = base_url.rstrip("/")
        if api_key is None and credentials_env:
            api_key = os.environ.get(credentials_env)
            if not api_key:
                raise ProviderError(
                    f"environment variable {credentials_env} is not set"
                )
        self._client = httpx.Client(
            timeout=timeout,
            transport=transport,
            headers={"Authorization": f"Bearer {api_key}"} if api_key else {},
        )

    def annotate(self, prompt: str, temperature: float) -> str:
        payload = {
            "model": self.model_id,
            "temperature": temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        try:
            response = self._client.post(
                f"{self.base_url}/chat/completions", json=payload
            )
            response.raise_for_status()
            body = response.json()
            return body["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as e:
            raise ProviderError(f"provider call failed: {e}") from e


# ---------------------------------------------------------------------------
# Deterministic mock
# ---------------------------------------------------------------------------

def stable_hash(text: str) -> int:
    return int.from_bytes(
        hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "big"
    )


def sentence_index(text: str) -> int:
    """Index of a synthetic sentence: its first digit group, else a stable hash."""
    m = re.search(r"\d+", text)
    if m:
        return int(m.group())
    return stable_hash(text)


@dataclass(frozen=True)
class Perturbation:
    """Mutation applied at one temperature to sentences the predicate selects."""

    predicate: Callable[[str], bool]
    token_index: int = 0
    field: str = "pos"

    @classmethod
    def index_mod(cls, lt: int, mod: int, token_index: int = 0, field: str = "pos"):
        """Select sentences whose index satisfies index % mod < lt."""
        return cls(
            predicate=lambda text: sentence_index(text) % mod < lt,
            token_index=token_index,
            field=field,
        )


def _load_lexicon(language: str) -> dict:
    return json.loads(
        resources.files("histannot.data")
        .joinpath(f"mock_lexicon/{language}.json")
        .read_text("utf-8")
    )


class MockProvider(AnnotationProvider):
    """Deterministic dictionary annotator emitting profile-shaped JSON.

    The provider only ever sees the rendered prompt, so it recovers the
    sentence by stripping the template's fixed prefix and suffix around the
    {sentence} slot. Perturbations are keyed by temperature: when the
    predicate selects a sentence, one field of one token is flipped, which
    downstream surfaces as an agreement failure.
    """

    supports_temperature = True

    def __init__(
        self,
        profile: LanguageProfile,
        template_body: str,
        lexicon: dict | None = None,
        perturb: dict[float, Perturbation] | None = None,
        model_id: str = "mock-annotator",
    ):
        self.model_id = model_id
        self.profile = profile
        prefix, _, suffix = template_body.partition("{sentence}")
        self._prefix = prefix
        self._suffix = suffix
        self.lexicon = lexicon or _load_lexicon(profile.language)
        self.perturb = perturb or {}
        self._max_key = max((len(k) for k in self.lexicon["entries"]), default=1)

    def provenance_timestamp(self) -> str:
        return MOCK_TIMESTAMP

    def sentence_from_prompt(self, prompt: str) -> str:
        if not prompt.startswith(self._prefix):
            raise ProviderError("prompt does not match the mock's template prefix")
        if self._suffix and not prompt.endswith(self._suffix):
            raise ProviderError("prompt does not match the mock's template suffix")
        end = len(prompt) - len(self._suffix) if self._suffix else len(prompt)
        return prompt[len(self._prefix):end]

    # -- tokenization ------------------------------------------------------

    def _tokenize_whitespace(self, text: str) -> list[str]:
        tokens = []
        for chunk in text.split(" "):
            if not chunk:
                continue
            core = chunk
            tail = []
            while core and core[-1] in FRENCH_PUNCT and len(core) > 1:
                tail.append(core[-1])
                core = core[:-1]
            tokens.append(core)
            tokens.extend(reversed(tail))
        return tokens

    def _tokenize_greedy(self, text: str) -> list[str]:
        entries = self.lexicon["entries"]
        tokens = []
        i = 0
        while i < len(text):
            match = None
            for width in range(min(self._max_key, len(text) - i), 1, -1):
                if text[i : i + width] in entries:
                    match = text[i : i + width]
                    break
            if match is None:
                match = text[i]
            tokens.append(match)
            i += len(match)
        return tokens

    # -- annotation --------------------------------------------------------

    def _annotate_tokens(self, tokens: list[str]) -> list[dict]:
        entries = self.lexicon["entries"]
        default = self.lexicon["default"]
        punct = self.lexicon["punct"]
        out = []
        for text in tokens:
            entry = entries.get(text) or entries.get(text.lower())
            if entry is None:
                if all(c in FRENCH_PUNCT + CHINESE_PUNCT for c in text):
                    entry = punct
                else:
                    entry = default
            out.append(
                {
                    "text": text,
                    "pos": entry["upos"],
                    "tag": entry["xpos"],
                    "lemma": entry.get("lemma", text.lower()),
                    "ent_iob": entry.get("ent_iob", "B" if entry.get("ent_type") else "O"),
                    "ent_type": entry.get("ent_type", ""),
                }
            )
        time_units = set(self.lexicon.get("time_units", ()))
        for i in range(len(out) - 1):
            if out[i]["tag"] == "CD" and out[i + 1]["text"] in time_units:
                out[i]["ent_iob"], out[i]["ent_type"] = "B", "TIME"
                out[i + 1]["ent_iob"], out[i + 1]["ent_type"] = "I", "TIME"
        return out

    def annotate(self, prompt: str, temperature: float) -> str:
        sentence = self.sentence_from_prompt(prompt)
        if self.profile.whitespace_script:
            tokens = self._tokenize_whitespace(sentence)
        else:
            tokens = self._tokenize_greedy(sentence)
        annotated = self._annotate_tokens(tokens)
        rule = self.perturb.get(temperature)
        if rule is not None and annotated and rule.predicate(sentence):
            idx = min(rule.token_index, len(annotated) - 1)
            if rule.field == "pos":
                annotated[idx]["pos"] = "X" if annotated[idx]["pos"] != "X" else "NOUN"
            elif rule.field == "lemma":
                annotated[idx]["lemma"] = annotated[idx]["lemma"] + "~"
            else:
                raise ProviderError(f"mock cannot perturb field {rule.field!r}")
        if self.profile.language == "french":
            body = {
                "tokens": [
                    {
                        "text": t["text"],
                        "pos": t["pos"],
                        "tag": t["tag"],
                        "lemma": t["lemma"],
                        "dep": "root" if i == 0 else "dep",
                        "ent": t["ent_iob"],
                    }
                    for i, t in enumerate(annotated)
                ]
            }
        else:
            body = {
                "text": sentence,
                "tokens": [
                    {
                        "text": t["text"],
                        "pos": t["pos"],
                        "tag": t["tag"],
                        "ent_iob_": t["ent_iob"],
                        "ent_type_": t["ent_type"],
                    }
                    for t in annotated
                ],
            }
        return json.dumps(body, ensure_ascii=False)


class FlakyProvider(AnnotationProvider):
    """Wrapper that fails the first `failures` calls per prompt+temperature.

    Exercises retry handling without touching the network.
    """

    def __init__(self, inner: AnnotationProvider, failures: int, malformed: bool = False):
        self.inner = inner
        self.model_id = inner.model_id
        self.failures = failures
        self.malformed = malformed
        self._calls: dict[tuple[str, float], int] = {}

    def provenance_timestamp(self) -> str:
        return self.inner.provenance_timestamp()

    def annotate(self, prompt: str, temperature: float) -> str:
        key = (prompt, temperature)
        n = self._calls.get(key, 0)
        self._calls[key] = n + 1
        if n < self.failures:
            if self.malformed:
                return "sorry, no JSON today"
            raise ProviderError("simulated transport failure")
        return self.inner.annotate(prompt, temperature)
