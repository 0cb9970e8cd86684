"""Render evaluation results as aligned text tables and CSV series.

Shapes mirror the reports this kind of study publishes: adjudication
accuracy by period, normalized segmentation-aware scores per dataset/model,
and side-by-side model comparisons with per-period POS series for plotting.
"""
from __future__ import annotations

import csv
import io

from .evaluation import AdjudicationTable, EvalReport, ModelComparison, round2


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{round2(value):.2f}"
    return str(value)


def format_table(headers: list[str], rows: list[list]) -> str:
    cells = [[_fmt(c) for c in row] for row in rows]
    widths = [
        max(len(h), *(len(r[i]) for r in cells)) if cells else len(h)
        for i, h in enumerate(headers)
    ]
    def line(parts):
        return "  ".join(p.ljust(w) for p, w in zip(parts, widths)).rstrip()
    sep = "-" * (sum(widths) + 2 * (len(widths) - 1))
    out = [line(headers), sep]
    out.extend(line(r) for r in cells)
    return "\n".join(out)


def adjudication_table_text(table: AdjudicationTable) -> str:
    field_headers = {
        "upos": "POS Acc. (%)",
        "lemma": "Lemma Acc. (%)",
        "ner": "NER Acc. (%)",
    }
    headers = ["Period", "Total Tokens", "Total Labeling Errors"] + [
        field_headers.get(f, f) for f in table.fields
    ]
    rows = []
    for label, row in table.rows.items():
        rows.append(
            [label, row["tokens"], sum(row["errors"].values())]
            + [row["accuracy"][f] for f in table.fields]
        )
    rows.append(
        ["All", table.overall["tokens"], sum(table.overall["errors"].values())]
        + [table.overall["accuracy"][f] for f in table.fields]
    )
    text = format_table(headers, rows)
    if table.pending:
        text += f"\nnote: {len(table.pending)} sentence(s) pending, excluded"
    return text


def eval_table_text(report: EvalReport, dataset: str = "dataset", model: str = "model") -> str:
    headers = ["Dataset", "Model", "Token F1", "POS", "POS_Norm", "NER", "NER_Norm", "Lemma"]
    rows = [[
        dataset,
        model,
        report.token_f1,
        report.pos_score,
        report.pos_norm,
        report.ner_f1,
        report.ner_norm,
        report.lemma_accuracy,
    ]]
    omitted = []
    for label, sub in report.per_stratum.items():
        if sub.counts.get("sentences", 0) == 0:
            omitted.append(label)
            continue
        rows.append([
            f"{dataset}:{label}",
            model,
            sub.token_f1,
            sub.pos_score,
            sub.pos_norm,
            sub.ner_f1,
            sub.ner_norm,
            sub.lemma_accuracy,
        ])
    text = format_table(headers, rows)
    if omitted:
        text += f"\nnote: empty strata omitted: {', '.join(omitted)}"
    return text


def comparison_table_text(comparison: ModelComparison) -> str:
    headers = ["Period", "Model", "POS Acc (%)", "Lemma Acc (%)", "NER (%)"]
    rows = []
    for row in comparison.rows:
        rows.append([
            row["period"],
            comparison.label_a,
            row["pos_score_a"],
            row["lemma_accuracy_a"],
            row["ner_f1_a"],
        ])
        rows.append([
            "",
            comparison.label_b,
            row["pos_score_b"],
            row["lemma_accuracy_b"],
            row["ner_f1_b"],
        ])
        rows.append([
            "",
            "delta",
            row["delta_pos_score"],
            row["delta_lemma_accuracy"],
            row["delta_ner_f1"],
        ])
    return format_table(headers, rows)


def series_csv(rows: list[dict]) -> str:
    """One CSV row per (period, model) with its POS score."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["period", "model", "pos"], lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(
            {
                "period": row["period"],
                "model": row["model"],
                "pos": "" if row["pos"] is None else f"{round2(row['pos']):.2f}",
            }
        )
    return buf.getvalue()


def report_series(report: EvalReport, model: str = "model") -> list[dict]:
    return [
        {"period": label, "model": model, "pos": sub.pos_score}
        for label, sub in report.per_stratum.items()
    ]
