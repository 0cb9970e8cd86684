"""Pipeline stages as pure file-to-file transforms with provenance manifests.

Every stage writes a manifest recording input/output content hashes, counts,
seeds, and the tool version. Manifests contain no timestamps, so a rerun with
unchanged inputs and seeds is byte-identical end to end; the manifest chain
lets any artifact be traced back to the corpus it came from.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import __version__
from .builder import (
    AugmentationSpec,
    SplitSpec,
    apply_fix_rules,
    augment_rare,
    check_corpus_consistency,
    load_fix_rules,
    load_mapping,
    stratified_split,
)
from .conllu import export_conllu, import_conllu
from .corpus import SampleSpec, ingest_corpus, read_records, stratified_sample, write_records
from .driver import (
    AgreementPolicy,
    RetryPolicy,
    load_template,
    run_batch,
    write_discards,
)
from .evaluation import evaluate_corpus
from .providers import HttpChatProvider, MockProvider, Perturbation
from .schema import (
    get_profile,
    read_sentences,
    validate_sentence,
    write_sentences,
)

STAGES = ("sample", "annotate", "build", "split", "export", "train-handoff", "evaluate")


class ConfigError(ValueError):
    """Invalid pipeline configuration (exit code 1)."""


class MissingArtifactError(FileNotFoundError):
    """An upstream stage output is absent (exit code 2)."""

    def __init__(self, producing_stage: str, path: Path):
        super().__init__(f"missing artifact: {producing_stage} (expected {path})")
        self.producing_stage = producing_stage


@dataclass
class PipelineConfig:
    profile: str = "french"
    corpus: str = ""
    out_dir: str = "out"
    granularity: str = "century"
    per_stratum: int = 10
    sample_seed: int = 0
    provider: dict = field(default_factory=lambda: {"kind": "mock"})
    temperatures: tuple[float, ...] = ()
    concurrency: int = 4
    retries: int = 3
    rules: str | None = None
    mapping: str | None = None
    auto_correct: bool = True
    augmentation: AugmentationSpec = field(default_factory=AugmentationSpec)
    split: SplitSpec = field(default_factory=SplitSpec)
    export_format: str = "conllu"
    eval_gold: str | None = None
    eval_pred: str | None = None

    def validate(self) -> None:
        profile = get_profile(self.profile)
        if not self.corpus:
            raise ConfigError("config must name a corpus file")
        if not Path(self.corpus).exists():
            raise ConfigError(f"corpus file {self.corpus!r} does not exist")
        for label, path in (("rules", self.rules), ("mapping", self.mapping)):
            if path is not None and not Path(path).exists():
                raise ConfigError(f"{label} file {path!r} does not exist")
        if not self.temperatures:
            raise ConfigError("at least one temperature required")
        for t in self.temperatures:
            if not 0.0 <= t <= 2.0:
                raise ConfigError(f"temperature {t} outside [0, 2]")
        if self.export_format not in ("conllu", "training-json"):
            raise ConfigError(f"unknown export format {self.export_format!r}")
        kind = self.provider.get("kind", "mock")
        if kind == "http" and not self.provider.get("base_url"):
            raise ConfigError("http provider requires base_url")
        if kind not in ("mock", "http"):
            raise ConfigError(f"unknown provider kind {kind!r}")
        _ = profile  # profile existence is the check


def _default_temperatures(profile_name: str) -> tuple[float, ...]:
    return (0.1, 0.7) if profile_name == "chinese" else (0.0,)


def load_config(path: str | Path, overrides: dict | None = None) -> PipelineConfig:
    """Parse the YAML config file; CLI flag overrides win over file values."""
    with open(path, "r", encoding="utf-8") as f:
        raw = yaml.safe_load(f) or {}
    return config_from_dict(raw, overrides)


def config_from_dict(raw: dict, overrides: dict | None = None) -> PipelineConfig:
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    sampling = raw.get("sampling", {})
    provider = dict(raw.get("provider", {}) or {})
    augmentation = raw.get("augmentation", {})
    split = raw.get("split", {})
    evaluate = raw.get("evaluate", {})
    profile = overrides.get("profile", raw.get("profile", "french"))
    temps = provider.get("temperatures") or _default_temperatures(profile)
    seed_override = overrides.get("seed")
    cfg = PipelineConfig(
        profile=profile,
        corpus=overrides.get("corpus", raw.get("corpus", "")),
        out_dir=overrides.get("out_dir", raw.get("out_dir", "out")),
        granularity=sampling.get("granularity", "century"),
        per_stratum=int(sampling.get("per_stratum", 10)),
        sample_seed=int(seed_override if seed_override is not None else sampling.get("seed", 0)),
        provider=provider,
        temperatures=tuple(float(t) for t in temps),
        concurrency=int(provider.get("concurrency", 4)),
        retries=int(provider.get("retries", 3)),
        rules=raw.get("rules"),
        mapping=raw.get("mapping"),
        auto_correct=bool(raw.get("auto_correct", True)),
        augmentation=AugmentationSpec(
            rare_upos=frozenset(augmentation.get("rare_upos", ["INTJ"])),
            rare_xpos=frozenset(augmentation.get("rare_xpos", ["VIMP"])),
            factor=int(augmentation.get("factor", 2)),
        ),
        split=SplitSpec(
            ratios=tuple(split.get("ratios", (0.8, 0.1, 0.1))),
            seed=int(
                seed_override if seed_override is not None else split.get("seed", 0)
            ),
        ),
        export_format=raw.get("export_format", "conllu"),
        eval_gold=evaluate.get("gold"),
        eval_pred=evaluate.get("pred"),
    )
    cfg.validate()
    return cfg


def load_prompt_template(config: PipelineConfig):
    """Shipped template for the profile, or a user template file from config."""
    path = config.provider.get("template")
    if path:
        from .driver import PromptTemplate

        with open(path, "r", encoding="utf-8") as f:
            return PromptTemplate(language=config.profile, body=f.read())
    return load_template(config.profile)


def build_provider(config: PipelineConfig):
    kind = config.provider.get("kind", "mock")
    profile = get_profile(config.profile)
    if kind == "http":
        return HttpChatProvider(
            model_id=config.provider.get("model", "unknown"),
            base_url=config.provider["base_url"],
            credentials_env=config.provider.get("credentials_env"),
        )
    perturb = {}
    disagree = config.provider.get("disagree")
    if disagree:
        temp = float(disagree.get("temperature", config.temperatures[-1]))
        perturb[temp] = Perturbation.index_mod(
            lt=int(disagree["lt"]), mod=int(disagree["mod"])
        )
    return MockProvider(
        profile,
        load_prompt_template(config).body,
        perturb=perturb,
        model_id=config.provider.get("model", "mock-annotator"),
    )


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------

def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: Path, stage: str, inputs, outputs, counts: dict, seed=None) -> Path:
    manifest_dir = out_dir / "manifests"
    manifest_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "stage": stage,
        "tool_version": __version__,
        "seed": seed,
        "inputs": [
            {"path": str(p), "sha256": sha256_file(Path(p))} for p in inputs
        ],
        "outputs": [
            {"path": str(p), "sha256": sha256_file(Path(p))} for p in outputs
        ],
        "counts": counts,
    }
    path = manifest_dir / f"{stage}.json"
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
    return path


def verify_manifest_chain(out_dir: Path) -> list[str]:
    """Check that every manifest's recorded hashes match the files on disk.

    Returns a list of problems; empty means the chain is intact.
    """
    problems = []
    manifest_dir = Path(out_dir) / "manifests"
    if not manifest_dir.is_dir():
        return ["no manifests directory"]
    for mpath in sorted(manifest_dir.glob("*.json")):
        with open(mpath, "r", encoding="utf-8") as f:
            manifest = json.load(f)
        for role in ("inputs", "outputs"):
            for entry in manifest[role]:
                p = Path(entry["path"])
                if not p.exists():
                    problems.append(f"{mpath.name}: {role[:-1]} {p} is gone")
                elif sha256_file(p) != entry["sha256"]:
                    problems.append(f"{mpath.name}: {role[:-1]} {p} hash changed")
    return problems


def _require_artifact(path: Path, producing_stage: str) -> Path:
    if not path.exists():
        raise MissingArtifactError(producing_stage, path)
    return path


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------

def stage_sample(config: PipelineConfig, out=None) -> dict:
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus_path = Path(config.corpus)
    with open(corpus_path, "r", encoding="utf-8") as f:
        store = ingest_corpus(f, config.granularity)
    spec = SampleSpec(
        per_stratum_count=config.per_stratum,
        seed=config.sample_seed,
        granularity=config.granularity,
    )
    sampled = stratified_sample(store, spec)
    out = Path(out) if out else out_dir / "sampled.jsonl"
    write_records(out, sampled)
    counts = {"records": len(sampled), "strata": store.stratum_sizes()}
    write_manifest(
        out_dir, "sample", [corpus_path], [out], counts, seed=config.sample_seed
    )
    return counts


def stage_annotate(config: PipelineConfig, in_path=None, out=None, discards=None) -> dict:
    out_dir = Path(config.out_dir)
    sampled = (
        _require_artifact(Path(in_path), "sample (external input)")
        if in_path
        else _require_artifact(out_dir / "sampled.jsonl", "sample")
    )
    records = read_records(sampled)
    profile = get_profile(config.profile)
    provider = build_provider(config)
    policy = AgreementPolicy(
        temperatures=config.temperatures,
        mode=config.provider.get("agreement_mode", "exact"),
    )
    retry = RetryPolicy(max_attempts=config.retries)
    result = run_batch(
        provider,
        records,
        policy,
        profile,
        load_prompt_template(config),
        retry=retry,
        concurrency_limit=config.concurrency,
    )
    kept_path = Path(out) if out else out_dir / "annotated.jsonl"
    discards_path = Path(discards) if discards else out_dir / "discards.jsonl"
    write_sentences(kept_path, result.kept)
    write_discards(discards_path, result.discards)
    write_manifest(
        out_dir,
        "annotate",
        [sampled],
        [kept_path, discards_path],
        result.stats,
    )
    return result.stats


def stage_build(config: PipelineConfig, in_path=None, out=None) -> dict:
    out_dir = Path(config.out_dir)
    annotated = (
        _require_artifact(Path(in_path), "annotate (external input)")
        if in_path
        else _require_artifact(out_dir / "annotated.jsonl", "annotate")
    )
    sentences = read_sentences(annotated)
    profile = get_profile(config.profile)
    inputs = [annotated]
    log: list[dict] = []
    if config.rules:
        with open(config.rules, "r", encoding="utf-8") as f:
            rules = load_fix_rules(f, profile)
        sentences, log = apply_fix_rules(sentences, rules)
        inputs.append(Path(config.rules))
    mapping = load_mapping(profile, config.mapping)
    if config.mapping:
        inputs.append(Path(config.mapping))
    sentences, flags = check_corpus_consistency(
        sentences, mapping, auto_correct=config.auto_correct
    )
    built = Path(out) if out else out_dir / "built.jsonl"
    fix_log = out_dir / "fix_log.jsonl"
    flags_path = out_dir / "flags.jsonl"
    write_sentences(built, sentences)
    for path, rows in ((fix_log, log), (flags_path, flags)):
        with open(path, "w", encoding="utf-8") as f:
            for row in rows:
                f.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
    counts = {
        "sentences": len(sentences),
        "fix_changes": len(log),
        "consistency_flags": len(flags),
        "auto_corrected": sum(1 for f in flags if f["corrected"]),
    }
    write_manifest(out_dir, "build", inputs, [built, fix_log, flags_path], counts)
    return counts


def stage_split(config: PipelineConfig, in_path=None) -> dict:
    out_dir = Path(config.out_dir)
    built = (
        _require_artifact(Path(in_path), "build (external input)")
        if in_path
        else _require_artifact(out_dir / "built.jsonl", "build")
    )
    sentences = read_sentences(built)
    splits, warnings = stratified_split(sentences, config.split)
    train, report = augment_rare(splits["train"], config.augmentation)
    splits = {"train": train, "dev": splits["dev"], "test": splits["test"]}
    split_dir = out_dir / "splits"
    split_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for name in ("train", "dev", "test"):
        path = split_dir / f"{name}.jsonl"
        write_sentences(path, splits[name])
        outputs.append(path)
    counts = {
        "train": len(splits["train"]),
        "dev": len(splits["dev"]),
        "test": len(splits["test"]),
        "augmentation": report,
        "warnings": warnings,
    }
    write_manifest(out_dir, "split", [built], outputs, counts, seed=config.split.seed)
    return counts


def stage_export(config: PipelineConfig) -> dict:
    out_dir = Path(config.out_dir)
    split_dir = out_dir / "splits"
    export_dir = out_dir / "export"
    export_dir.mkdir(parents=True, exist_ok=True)
    inputs, outputs = [], []
    counts = {}
    for name in ("train", "dev", "test"):
        src = _require_artifact(split_dir / f"{name}.jsonl", "split")
        sentences = read_sentences(src)
        inputs.append(src)
        if config.export_format == "conllu":
            dst = export_dir / f"{name}.conllu"
            export_conllu(sentences, dst)
        else:
            dst = export_dir / f"{name}.jsonl"
            write_sentences(dst, sentences)
        outputs.append(dst)
        counts[name] = len(sentences)
    write_manifest(out_dir, "export", inputs, outputs, counts)
    return counts


def stage_train_handoff(config: PipelineConfig) -> dict:
    out_dir = Path(config.out_dir)
    export_dir = out_dir / "export"
    ext = "conllu" if config.export_format == "conllu" else "jsonl"
    paths = {
        name: _require_artifact(export_dir / f"{name}.{ext}", "export")
        for name in ("train", "dev", "test")
    }
    handoff = {
        "profile": config.profile,
        "format": config.export_format,
        "train": str(paths["train"]),
        "dev": str(paths["dev"]),
        "test": str(paths["test"]),
    }
    out = out_dir / "handoff.json"
    with open(out, "w", encoding="utf-8") as f:
        json.dump(handoff, f, indent=2, sort_keys=True)
        f.write("\n")
    counts = {"files": 3}
    write_manifest(out_dir, "train-handoff", list(paths.values()), [out], counts)
    return counts


def stage_evaluate(config: PipelineConfig) -> dict:
    out_dir = Path(config.out_dir)
    gold_path = Path(config.eval_gold or out_dir / "export" / "test.conllu")
    pred_path = Path(config.eval_pred or gold_path)
    gold_path = _require_artifact(gold_path, "export")
    pred_path = _require_artifact(pred_path, "predictions (external)")
    profile = get_profile(config.profile)
    gold = import_conllu(gold_path, config.profile)
    pred = import_conllu(pred_path, config.profile)
    report = evaluate_corpus(gold, pred, profile)
    eval_dir = out_dir / "eval"
    eval_dir.mkdir(parents=True, exist_ok=True)
    report_path = eval_dir / "report.json"
    with open(report_path, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
    counts = {"sentences": report.counts["sentences"]}
    write_manifest(out_dir, "evaluate", [gold_path, pred_path], [report_path], counts)
    return counts


_STAGE_FUNCS = {
    "sample": stage_sample,
    "annotate": stage_annotate,
    "build": stage_build,
    "split": stage_split,
    "export": stage_export,
    "train-handoff": stage_train_handoff,
    "evaluate": stage_evaluate,
}


def run_stage(stage: str, config: PipelineConfig) -> dict:
    """Run one named stage; returns its count summary for the stage report."""
    if stage not in _STAGE_FUNCS:
        raise ConfigError(f"unknown stage {stage!r}; stages: {', '.join(STAGES)}")
    return _STAGE_FUNCS[stage](config)


def validate_exports(config: PipelineConfig) -> list[str]:
    """Re-import every exported partition and run the full validator suite."""
    out_dir = Path(config.out_dir)
    problems = []
    profile = get_profile(config.profile)
    for name in ("train", "dev", "test"):
        path = out_dir / "export" / f"{name}.conllu"
        if not path.exists():
            problems.append(f"missing export {path}")
            continue
        for sentence in import_conllu(path, config.profile):
            for v in validate_sentence(sentence, profile):
                problems.append(f"{name}:{sentence.id}: {v}")
    return problems
