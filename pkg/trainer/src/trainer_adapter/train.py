"""Training with per-epoch dev evaluation and early stopping."""
from __future__ import annotations

import copy
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import torch
from torch import nn

from .corpus import Corpus, check_disjoint, components_for, convert_corpus
from .model import LemmaLookup, SequenceTagger


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainJob:
    train_path: str
    dev_path: str
    profile: str
    output_dir: str
    base_model: str = "bilstm-tiny"
    patience: int = 2
    max_epochs: int = 10
    seed: int = 0
    learning_rate: float = 0.05

    def __post_init__(self):
        components_for(self.profile)
        if self.patience < 1 or self.max_epochs < 1:
            raise TrainingError("patience and max_epochs must be >= 1")


@dataclass
class TaggerBundle:
    """Every trained component for one profile, saved/loaded as one artifact."""

    profile: str
    taggers: dict[str, SequenceTagger]
    lemmas: LemmaLookup | None = None
    vocab: list[str] = field(default_factory=list)

    @property
    def tasks(self) -> list[str]:
        return sorted(self.taggers)

    @classmethod
    def initialize(cls, train: Corpus, seed: int) -> "TaggerBundle":
        torch.manual_seed(seed)
        vocab = train.vocabulary()
        taggers = {}
        for task in ("upos", "xpos", "ner"):
            if task == "ner" and train.profile != "chinese":
                continue
            labels = train.label_set(task)
            taggers[task] = SequenceTagger(vocab, labels)
        lemmas = None
        if train.profile == "french":
            lemmas = LemmaLookup().fit(train.examples)
        return cls(profile=train.profile, taggers=taggers, lemmas=lemmas, vocab=vocab)

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for task, tagger in self.taggers.items():
            tagger.save(directory, task)
        if self.lemmas is not None:
            self.lemmas.save(directory)
        with open(directory / "bundle.json", "w", encoding="utf-8") as f:
            json.dump(
                {"profile": self.profile, "tasks": self.tasks, "vocab": self.vocab},
                f,
                ensure_ascii=False,
            )

    @classmethod
    def load(cls, directory: str | Path) -> "TaggerBundle":
        directory = Path(directory)
        with open(directory / "bundle.json", "r", encoding="utf-8") as f:
            meta = json.load(f)
        taggers = {
            task: SequenceTagger.load(directory, task) for task in meta["tasks"]
        }
        lemmas = None
        if (directory / "lemmas.json").exists():
            lemmas = LemmaLookup.load(directory)
        return cls(
            profile=meta["profile"], taggers=taggers, lemmas=lemmas, vocab=meta["vocab"]
        )


def _labels_of(example, task: str) -> list[str]:
    return example.ner if task == "ner" else getattr(example, task)


def dev_accuracy(tagger: SequenceTagger, dev: Corpus, task: str) -> float:
    correct = total = 0
    for e in dev.examples:
        predicted = tagger.predict(e.forms)
        for p, g in zip(predicted, _labels_of(e, task)):
            total += 1
            if p == g:
                correct += 1
    return correct / total if total else 0.0


def train_task(
    tagger: SequenceTagger,
    train: Corpus,
    dev: Corpus,
    task: str,
    job: TrainJob,
    rng: random.Random,
) -> dict:
    """SGD over per-sentence updates with dev-accuracy early stopping.

    Keeps the parameters of the best epoch; epoch 0 records the untrained
    baseline before any update.
    """
    label_index = {label: i for i, label in enumerate(tagger.labels)}
    optimizer = torch.optim.Adam(tagger.parameters(), lr=job.learning_rate)
    loss_fn = nn.CrossEntropyLoss()
    history = [{"epoch": 0, "dev_accuracy": dev_accuracy(tagger, dev, task)}]
    best_epoch = 0
    best_score = history[0]["dev_accuracy"]
    best_state = copy.deepcopy(tagger.state_dict())
    order = list(range(len(train.examples)))
    for epoch in range(1, job.max_epochs + 1):
        tagger.train()
        rng.shuffle(order)
        epoch_loss = 0.0
        for idx in order:
            e = train.examples[idx]
            target = torch.tensor(
                [label_index[l] for l in _labels_of(e, task)], dtype=torch.long
            )
            optimizer.zero_grad()
            logits = tagger(tagger.encode(e.forms))[0]
            loss = loss_fn(logits, target)
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach())
        if math.isnan(epoch_loss) or math.isinf(epoch_loss):
            raise TrainingError(f"task {task}: loss diverged at epoch {epoch}")
        score = dev_accuracy(tagger, dev, task)
        history.append({"epoch": epoch, "dev_accuracy": score, "loss": epoch_loss})
        if score > best_score:
            best_score = score
            best_epoch = epoch
            best_state = copy.deepcopy(tagger.state_dict())
        elif epoch - best_epoch >= job.patience:
            break
    tagger.load_state_dict(best_state)
    return {
        "task": task,
        "selected_epoch": best_epoch,
        "best_dev_accuracy": best_score,
        "baseline_dev_accuracy": history[0]["dev_accuracy"],
        "epochs": history,
    }


def train(job: TrainJob) -> dict:
    """Run the whole job: convert, verify disjointness, train every component.

    Returns the training log; the model artifact and the log are written to
    the job's output directory.
    """
    train_corpus, train_report = convert_corpus(job.train_path, job.profile)
    dev_corpus, dev_report = convert_corpus(job.dev_path, job.profile)
    check_disjoint(train_corpus, dev_corpus)
    bundle = TaggerBundle.initialize(train_corpus, seed=job.seed)
    rng = random.Random(job.seed)
    log = {
        "base_model": job.base_model,
        "profile": job.profile,
        "seed": job.seed,
        "train": train_report,
        "dev": dev_report,
        "tasks": [],
    }
    for task in bundle.tasks:
        log["tasks"].append(
            train_task(bundle.taggers[task], train_corpus, dev_corpus, task, job, rng)
        )
    out = Path(job.output_dir)
    bundle.save(out)
    with open(out / "training_log.json", "w", encoding="utf-8") as f:
        json.dump(log, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
    return log
