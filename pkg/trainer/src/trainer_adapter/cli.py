"""CLI: train a tagger bundle on exported corpora, predict to CoNLL-U."""
from __future__ import annotations

import argparse
import json
import sys

from .corpus import CorpusError
from .predict import PredictError, predict_file
from .train import TrainJob, TrainingError, train


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="histannot-trainer")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train on exported train/dev CoNLL-U files")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--profile", required=True, choices=["french", "chinese"])
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--patience", type=int, default=2)
    p.add_argument("--max-epochs", type=int, default=10)

    p = sub.add_parser("predict", help="tag raw JSONL sentences into CoNLL-U")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)

    args = ap.parse_args(argv)
    try:
        if args.command == "train":
            job = TrainJob(
                train_path=args.train,
                dev_path=args.dev,
                profile=args.profile,
                output_dir=args.out,
                seed=args.seed,
                patience=args.patience,
                max_epochs=args.max_epochs,
            )
            log = train(job)
            for task in log["tasks"]:
                print(
                    f"[{task['task']}] selected epoch {task['selected_epoch']} "
                    f"dev accuracy {task['best_dev_accuracy']:.4f} "
                    f"(baseline {task['baseline_dev_accuracy']:.4f})"
                )
        else:
            n = predict_file(args.model, args.in_path, args.out)
            print(f"predicted {n} sentence(s) -> {args.out}")
        return 0
    except (CorpusError, TrainingError, PredictError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
