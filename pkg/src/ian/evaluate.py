"""Accuracy metric, confusion counts and side-by-side model comparison tables.

The benchmark metric is plain accuracy (correct / total).  Macro-F1 is
computed as an auxiliary diagnostic only and every rendering marks it as
such; nothing in this package selects models by it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import LABELS, ModelParams, forward


@dataclass
class EvalReport:
    """Outcome of scoring one model variant on one dataset."""

    variant: str
    dataset: str
    correct: int
    total: int
    accuracy: float
    confusion: np.ndarray  # rows gold, columns predicted
    macro_f1: float  # auxiliary diagnostic, not the benchmark metric


def predict_all(params: ModelParams, instances) -> np.ndarray:
    """Predicted label index per instance (dropout off)."""
    out = np.zeros(len(instances), dtype=np.int64)
    for i, inst in enumerate(instances):
        probs, _ = forward(params, inst.context_ids, inst.target_ids, span=inst.span)
        out[i] = int(np.argmax(probs))
    return out


def _macro_f1(confusion: np.ndarray) -> float:
    """Unweighted mean of per-class F1; a class with no gold and no predicted
    occurrences contributes 0."""
    scores = []
    for i in range(confusion.shape[0]):
        tp = confusion[i, i]
        gold_total = confusion[i].sum()
        pred_total = confusion[:, i].sum()
        denom = gold_total + pred_total
        scores.append(2.0 * tp / denom if denom else 0.0)
    return float(np.mean(scores))


def accuracy(preds, golds, variant: str = "", dataset: str = "") -> EvalReport:
    """Score a prediction sequence against gold labels.

    Both sequences hold class indices; they must be equally long and
    non-empty.  The confusion matrix has gold labels on rows and
    predictions on columns.
    """
    preds = list(preds)
    golds = list(golds)
    if not golds:
        raise ValueError("accuracy over an empty label sequence")
    if len(preds) != len(golds):
        raise ValueError(
            f"prediction/gold length mismatch: {len(preds)} vs {len(golds)}"
        )
    n = len(LABELS)
    confusion = np.zeros((n, n), dtype=np.int64)
    for pred, gold in zip(preds, golds):
        if not (0 <= gold < n) or not (0 <= pred < n):
            raise ValueError(f"label index out of range: pred={pred} gold={gold}")
        confusion[gold, pred] += 1
    correct = int(np.trace(confusion))
    total = len(golds)
    return EvalReport(
        variant=variant,
        dataset=dataset,
        correct=correct,
        total=total,
        accuracy=correct / total,
        confusion=confusion,
        macro_f1=_macro_f1(confusion),
    )


def evaluate_model(params: ModelParams, instances, dataset: str = "") -> EvalReport:
    """Predict every instance and score against the stored gold labels."""
    if not instances:
        raise ValueError("evaluate_model over an empty instance list")
    preds = predict_all(params, instances)
    golds = [inst.label for inst in instances]
    return accuracy(preds, golds, variant=params.variant, dataset=dataset)


def render_report(report: EvalReport) -> str:
    """Human-readable accuracy plus the confusion matrix and per-class recall."""
    head = f"{report.variant or 'model'}"
    if report.dataset:
        head += f" on {report.dataset}"
    lines = [
        f"{head}: accuracy {report.correct}/{report.total}"
        f" = {report.accuracy:.4f}   macro-F1 {report.macro_f1:.4f} (auxiliary)",
        "",
    ]
    width = max(len(name) for name in LABELS)
    header = " " * (width + 7) + "  ".join(f"{name:>{width}}" for name in LABELS)
    lines.append(header + "   recall")
    for i, name in enumerate(LABELS):
        row = "  ".join(f"{report.confusion[i, j]:>{width}}" for j in range(len(LABELS)))
        gold_total = report.confusion[i].sum()
        recall = report.confusion[i, i] / gold_total if gold_total else float("nan")
        lines.append(f"gold {name:>{width}}  {row}   {recall:.4f}")
    lines.append("(rows gold, columns predicted)")
    return "\n".join(lines)


def compare_variants(reports) -> str:
    """Aligned text table over several reports, in the given order.

    The best accuracy within each dataset is flagged with ``*`` (every
    report tied for best is flagged).  Macro-F1 stays marked auxiliary.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("compare_variants needs at least one report")
    best = {}
    for rep in reports:
        cur = best.get(rep.dataset)
        if cur is None or rep.accuracy > cur:
            best[rep.dataset] = rep.accuracy
    rows = []
    for rep in reports:
        flag = " *" if rep.accuracy == best[rep.dataset] else "  "
        rows.append(
            (
                rep.variant or "model",
                rep.dataset or "-",
                f"{rep.accuracy:.4f}{flag}",
                f"{rep.macro_f1:.4f}",
                f"{rep.correct}/{rep.total}",
            )
        )
    headers = ("variant", "dataset", "accuracy", "macro-F1(aux)", "correct/total")
    widths = [
        max(len(headers[c]), max(len(row[c]) for row in rows))
        for c in range(len(headers))
    ]
    lines = [
        "  ".join(f"{headers[c]:<{widths[c]}}" for c in range(len(headers))),
        "  ".join("-" * widths[c] for c in range(len(headers))),
    ]
    for row in rows:
        lines.append("  ".join(f"{row[c]:<{widths[c]}}" for c in range(len(headers))))
    lines.append("(* best accuracy within its dataset; macro-F1 is auxiliary only)")
    return "\n".join(lines)


def reports_tsv(reports) -> str:
    """Machine-readable tab-separated dump of the same reports."""
    lines = ["variant\tdataset\tcorrect\ttotal\taccuracy\tmacro_f1_aux"]
    for rep in reports:
        lines.append(
            f"{rep.variant}\t{rep.dataset}\t{rep.correct}\t{rep.total}"
            f"\t{rep.accuracy:.6f}\t{rep.macro_f1:.6f}"
        )
    return "\n".join(lines) + "\n"
