"""Single command-line entry point wiring the pipeline stages together.

Exit codes: 0 success, 1 validation failure, 2 missing upstream artifact,
3 provider failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .builder import RuleError
from .conllu import ConlluError, import_conllu
from .corpus import CorpusError
from .evaluation import (
    AdjudicationTable,
    EvalReport,
    EvaluationError,
    compare_models,
    evaluate_corpus,
)
from .pipeline import (
    ConfigError,
    MissingArtifactError,
    PipelineConfig,
    STAGES,
    config_from_dict,
    load_config,
    run_stage,
)
from .providers import ProviderError
from .reporting import (
    adjudication_table_text,
    comparison_table_text,
    eval_table_text,
    report_series,
    series_csv,
)
from .schema import SchemaError, get_profile

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_MISSING_ARTIFACT = 2
EXIT_PROVIDER = 3


def _config(args, **overrides) -> PipelineConfig:
    merged = {
        "seed": getattr(args, "seed", None),
        "out_dir": getattr(args, "out_dir", None),
        **overrides,
    }
    if getattr(args, "config", None):
        return load_config(args.config, merged)
    return config_from_dict({}, merged)


def cmd_run(args) -> int:
    config = _config(args)
    stages = [s.strip() for s in args.stages.split(",") if s.strip()]
    for stage in stages:
        counts = run_stage(stage, config)
        print(f"[{stage}] {json.dumps(counts, ensure_ascii=False, sort_keys=True)}")
    return EXIT_OK


def cmd_sample(args) -> int:
    overrides = {"corpus": args.corpus}
    config = _config(args, **overrides)
    if args.granularity:
        config.granularity = args.granularity
    if args.per_stratum:
        config.per_stratum = args.per_stratum
    if args.seed is not None:
        config.sample_seed = args.seed
    from .pipeline import stage_sample

    counts = stage_sample(config, out=args.out)
    print(f"[sample] {json.dumps(counts, ensure_ascii=False, sort_keys=True)}")
    return EXIT_OK


def cmd_annotate(args) -> int:
    config = _config(args)
    if args.profile:
        config.profile = args.profile
    if args.temps:
        config.temperatures = tuple(float(t) for t in args.temps.split(","))
    if args.concurrency:
        config.concurrency = args.concurrency
    from .pipeline import stage_annotate

    counts = stage_annotate(
        config, in_path=args.in_path, out=args.out, discards=args.discards
    )
    print(f"[annotate] {json.dumps(counts, ensure_ascii=False, sort_keys=True)}")
    return EXIT_OK


def cmd_build(args) -> int:
    config = _config(args)
    if args.rules:
        config.rules = args.rules
    if args.map:
        config.mapping = args.map
    if args.auto_correct:
        config.auto_correct = True
    from .pipeline import stage_build

    counts = stage_build(config, in_path=args.in_path, out=args.out)
    print(f"[build] {json.dumps(counts, ensure_ascii=False, sort_keys=True)}")
    return EXIT_OK


def cmd_split(args) -> int:
    config = _config(args)
    if args.ratios:
        parts = tuple(float(r) for r in args.ratios.split(","))
        config.split = type(config.split)(ratios=parts, seed=config.split.seed)
    if args.seed is not None:
        config.split = type(config.split)(ratios=config.split.ratios, seed=args.seed)
    from .pipeline import stage_split

    counts = stage_split(config, in_path=args.in_path)
    print(f"[split] {json.dumps(counts, ensure_ascii=False, sort_keys=True)}")
    return EXIT_OK


def cmd_export(args) -> int:
    config = _config(args)
    if args.format:
        config.export_format = args.format
    counts = run_stage("export", config)
    print(f"[export] {json.dumps(counts, ensure_ascii=False, sort_keys=True)}")
    return EXIT_OK


def cmd_train_handoff(args) -> int:
    config = _config(args)
    counts = run_stage("train-handoff", config)
    print(f"[train-handoff] {json.dumps(counts, sort_keys=True)}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    profile = get_profile(args.profile)
    gold_path, pred_path = Path(args.gold), Path(args.pred)
    if not gold_path.exists():
        raise MissingArtifactError("export", gold_path)
    if not pred_path.exists():
        raise MissingArtifactError("predictions (external)", pred_path)
    gold = import_conllu(gold_path, args.profile)
    pred = import_conllu(pred_path, args.profile)
    report = evaluate_corpus(
        gold, pred, profile, repair_pred_iob=args.ner_mode != "strict"
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "report.json", "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
    print(eval_table_text(report, dataset=gold_path.stem, model=pred_path.stem))
    if args.ner_mode == "token" and report.ner_token_accuracy is not None:
        print(f"NER token-level accuracy: {report.ner_token_accuracy:.2f}")
    return EXIT_OK


def cmd_report(args) -> int:
    reports = []
    for path in args.reports:
        p = Path(path)
        if not p.exists():
            raise MissingArtifactError("evaluate", p)
        with open(p, "r", encoding="utf-8") as f:
            reports.append(EvalReport.from_dict(json.load(f)))
    adjudication_block = None
    if args.adjudication:
        apath = Path(args.adjudication)
        if not apath.exists():
            raise MissingArtifactError("review export", apath)
        with open(apath, "r", encoding="utf-8") as f:
            exported = json.load(f)
        summary = exported.get("summary", exported)
        table = AdjudicationTable(
            rows=summary["rows"],
            overall=summary["overall"],
            fields=tuple(summary["fields"]),
            pending=summary.get("pending", []),
        )
        adjudication_block = adjudication_table_text(table)
    labels = args.labels.split(",") if args.labels else [f"model_{i}" for i in range(len(reports))]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    blocks = []
    if adjudication_block:
        blocks.append(adjudication_block)
    for report, label in zip(reports, labels):
        blocks.append(eval_table_text(report, dataset=args.dataset, model=label))
    rows = []
    if len(reports) == 2:
        comparison = compare_models(
            reports[0], reports[1], label_a=labels[0], label_b=labels[1]
        )
        blocks.append(comparison_table_text(comparison))
        rows = comparison.series()
    else:
        for report, label in zip(reports, labels):
            rows.extend(report_series(report, model=label))
    tables = "\n\n".join(blocks) + "\n"
    (out_dir / "tables.txt").write_text(tables, encoding="utf-8")
    (out_dir / "series.csv").write_text(series_csv(rows), encoding="utf-8")
    print(tables)
    return EXIT_OK


def cmd_review_serve(args) -> int:
    from .review import serve

    serve(args.session_dir, port=args.port, ui_dir=args.ui_dir)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="histannot",
        description="Bootstrap gold-standard annotations for historical corpora",
    )
    ap.add_argument("--config", help="pipeline config file (YAML)")
    ap.add_argument("--seed", type=int, default=None, help="override config seeds")
    ap.add_argument("--out-dir", default=None, help="override output directory")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a comma-separated list of stages")
    p.add_argument("--stages", default=",".join(STAGES[:5]))
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sample", help="draw a stratified sample from a corpus")
    p.add_argument("--corpus", required=False)
    p.add_argument("--granularity", choices=["century", "decade"])
    p.add_argument("--per-stratum", type=int, dest="per_stratum")
    p.add_argument("--out", default=None, help="sampled-records file (JSONL)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("annotate", help="annotate the sample via the provider")
    p.add_argument("--in", dest="in_path", default=None, help="sampled-records file")
    p.add_argument("--profile", choices=["french", "chinese"])
    p.add_argument("--temps", help="comma-separated temperatures, e.g. 0.1,0.7")
    p.add_argument("--concurrency", type=int)
    p.add_argument("--out", default=None, help="kept-sentences file (JSONL)")
    p.add_argument("--discards", default=None, help="discard-log file (JSONL)")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("build", help="apply fix rules and UD consistency checks")
    p.add_argument("--in", dest="in_path", default=None, help="annotated-sentences file")
    p.add_argument("--rules")
    p.add_argument("--map")
    p.add_argument("--auto-correct", action="store_true", dest="auto_correct")
    p.add_argument("--out", default=None, help="built-sentences file (JSONL)")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("split", help="stratified train/dev/test split")
    p.add_argument("--in", dest="in_path", default=None, help="built-sentences file")
    p.add_argument("--ratios", help="e.g. 0.8,0.1,0.1")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("export", help="export partitions")
    p.add_argument("--format", choices=["conllu", "training-json"])
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("train-handoff", help="write the trainer handoff manifest")
    p.set_defaults(func=cmd_train_handoff)

    p = sub.add_parser("evaluate", help="score predictions against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--profile", required=True, choices=["french", "chinese"])
    p.add_argument("--out", default="eval")
    p.add_argument("--ner-mode", choices=["span", "token", "strict"], default="span")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="render tables and CSV series from reports")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--labels")
    p.add_argument("--dataset", default="dataset")
    p.add_argument("--adjudication", help="review export JSON for the accuracy table")
    p.add_argument("--out", default="report")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("review", help="review service commands")
    review_sub = p.add_subparsers(dest="review_command", required=True)
    ps = review_sub.add_parser("serve", help="serve the adjudication API and UI")
    ps.add_argument("--session-dir", required=True)
    ps.add_argument("--port", type=int, default=8000)
    ps.add_argument("--ui-dir", default=None)
    ps.set_defaults(func=cmd_review_serve)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except MissingArtifactError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MISSING_ARTIFACT
    except ProviderError as e:
        print(f"provider error: {e}", file=sys.stderr)
        return EXIT_PROVIDER
    except (ConfigError, CorpusError, RuleError, ConlluError, EvaluationError, SchemaError, ValueError) as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
