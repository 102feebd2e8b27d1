"""Binary confusion matrices and precision/recall/F1 reports.

Empty-denominator convention: a class that is never predicted has precision
0, a class with no true samples has recall 0, and F1 is 0 when both
precision and recall are 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are true classes, columns predicted classes, order (negative, positive)."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (2, 2) or counts.min() < 0:
            raise ValidationError(f"need a 2x2 matrix of non-negative counts, got {counts!r}")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_csv(self, path, class_names=("0", "1")) -> None:
        lines = ["true\\pred," + ",".join(class_names)]
        for name, row in zip(class_names, self.counts):
            lines.append(f"{name}," + ",".join(str(int(v)) for v in row))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def from_csv(cls, path) -> tuple["ConfusionMatrix", tuple[str, str]]:
        rows = [line.split(",") for line in Path(path).read_text(encoding="utf-8").split("\n") if line]
        if len(rows) != 3 or any(len(r) != 3 for r in rows):
            raise ValidationError(f"{path}: expected a 3x3 CSV (header + 2 rows)")
        names = (rows[0][1], rows[0][2])
        try:
            counts = [[int(v) for v in r[1:]] for r in rows[1:]]
        except ValueError as exc:
            raise ValidationError(f"{path}: non-integer count ({exc})") from None
        return cls(np.array(counts)), names


def confusion(y_true, y_pred) -> ConfusionMatrix:
    y_true = np.asarray(y_true).astype(np.int64)
    y_pred = np.asarray(y_pred).astype(np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ValidationError(f"label arrays must be 1-D and equal length: {y_true.shape} vs {y_pred.shape}")
    if not (np.isin(y_true, (0, 1)).all() and np.isin(y_pred, (0, 1)).all()):
        raise ValidationError("labels must be 0 or 1")
    counts = np.bincount(2 * y_true + y_pred, minlength=4).reshape(2, 2)
    return ConfusionMatrix(counts)


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ClassificationReport:
    class_names: tuple[str, str]
    per_class: tuple[ClassScores, ClassScores]
    accuracy: float
    macro: ClassScores
    weighted: ClassScores
    confusion: ConfusionMatrix

    @property
    def total(self) -> int:
        return self.confusion.total

    def as_dict(self) -> dict:
        out = {"classes": {}}
        for name, s in zip(self.class_names, self.per_class):
            out["classes"][name] = vars(s).copy()
        out["accuracy"] = self.accuracy
        out["macro_avg"] = vars(self.macro).copy()
        out["weighted_avg"] = vars(self.weighted).copy()
        out["confusion"] = self.confusion.counts.tolist()
        out["total"] = self.total
        return out

    def render(self) -> str:
        return render_report(self)

    def save(self, directory, stem: str = "") -> None:
        directory = Path(directory)
        (directory / f"{stem}report.txt").write_text(self.render(), encoding="utf-8")
        (directory / f"{stem}metrics.json").write_text(
            json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        self.confusion.to_csv(directory / f"{stem}confusion.csv", self.class_names)


def _safe_div(num, den):
    return float(num) / float(den) if den else 0.0


def report(cm: ConfusionMatrix, class_names=("0", "1")) -> ClassificationReport:
    if not isinstance(cm, ConfusionMatrix):
        cm = ConfusionMatrix(cm)
    if cm.total == 0:
        raise ValidationError("confusion matrix is all zeros")
    if len(class_names) != 2:
        raise ValidationError("binary report needs exactly two class names")
    c = cm.counts
    scores = []
    for k in range(2):
        precision = _safe_div(c[k, k], c[:, k].sum())
        recall = _safe_div(c[k, k], c[k, :].sum())
        f1 = _safe_div(2 * precision * recall, precision + recall)
        scores.append(ClassScores(precision, recall, f1, int(c[k, :].sum())))
    total = cm.total
    macro = ClassScores(*(float(np.mean([getattr(s, a) for s in scores]))
                          for a in ("precision", "recall", "f1")), total)
    weighted = ClassScores(*(sum(getattr(s, a) * s.support for s in scores) / total
                             for a in ("precision", "recall", "f1")), total)
    return ClassificationReport(tuple(str(n) for n in class_names), tuple(scores),
                                _safe_div(np.trace(c), total), macro, weighted, cm)


def render_report(rep: ClassificationReport, digits: int = 2) -> str:
    """Fixed-width table: class rows, accuracy, macro avg., weighted avg."""
    labels = list(rep.class_names) + ["accuracy", "macro avg.", "weighted avg."]
    width = max(len(s) for s in labels) + 2
    col = max(digits + 6, 10)
    fmt = f"{{:.{digits}f}}"
    lines = [" " * width + "".join(h.rjust(col) for h in ("Precision", "Recall", "F1-Score", "Support"))]
    for name, s in zip(rep.class_names, rep.per_class):
        cells = [fmt.format(s.precision), fmt.format(s.recall), fmt.format(s.f1), str(s.support)]
        lines.append(name.ljust(width) + "".join(v.rjust(col) for v in cells))
    lines.append("")
    lines.append("accuracy".ljust(width) + " " * (2 * col) + fmt.format(rep.accuracy).rjust(col)
                 + str(rep.total).rjust(col))
    for name, s in (("macro avg.", rep.macro), ("weighted avg.", rep.weighted)):
        cells = [fmt.format(s.precision), fmt.format(s.recall), fmt.format(s.f1), str(s.support)]
        lines.append(name.ljust(width) + "".join(v.rjust(col) for v in cells))
    return "\n".join(lines) + "\n"
