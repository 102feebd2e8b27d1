"""Binary soft-margin SVM trained in the dual with simplified SMO.

Labels are -1/+1 throughout this module; :func:`to_signed` and
:func:`from_signed` convert from and to the 0/1 labels used by datasets.

Simplified SMO sweeps every sample ``i`` that violates the KKT conditions by
more than ``tol`` and pairs it with a second index drawn from a SplitMix64
stream seeded by ``seed``.  Training stops after ``max_passes`` consecutive
sweeps without a change (or ``max_sweeps`` sweeps in total).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import NumericalError, ValidationError

LINEAR = "LINEAR"
RBF = "RBF"
POLY = "POLY"
PRECOMPUTED = "PRECOMPUTED"
KERNEL_KINDS = (LINEAR, RBF, POLY, PRECOMPUTED)
FORMAT_TAG = "svm-v1"


@dataclass(frozen=True)
class KernelSpec:
    kind: str = RBF
    gamma: float | None = None
    degree: int = 3
    coef0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", self.kind.upper())
        if self.kind not in KERNEL_KINDS:
            raise ValidationError(f"kernel kind must be one of {KERNEL_KINDS}, got {self.kind!r}")
        if self.gamma is not None and not self.gamma > 0:
            raise ValidationError(f"gamma must be > 0, got {self.gamma}")
        if self.degree < 1:
            raise ValidationError(f"degree must be >= 1, got {self.degree}")

    def resolved(self, X: np.ndarray) -> "KernelSpec":
        """Fill an unset gamma with 1 / (n_features * var(X))."""
        if self.kind not in (RBF, POLY) or self.gamma is not None:
            return self
        var = float(np.var(X))
        gamma = 1.0 / (X.shape[1] * var) if var > 0 else 1.0
        return KernelSpec(self.kind, gamma, self.degree, self.coef0)

    def as_dict(self) -> dict:
        return {"kind": self.kind, "gamma": self.gamma, "degree": self.degree,
                "coef0": self.coef0}


def to_signed(labels) -> np.ndarray:
    labels = np.asarray(labels)
    return np.where(labels > 0, 1.0, -1.0)


def from_signed(labels) -> np.ndarray:
    return (np.asarray(labels) > 0).astype(np.int64)


def kernel_eval(spec: KernelSpec, x, z) -> float:
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape:
        raise ValidationError(f"length mismatch: {x.shape} vs {z.shape}")
    return float(kernel_matrix(spec, x[None, :], z[None, :])[0, 0])


def kernel_matrix(spec: KernelSpec, A, B) -> np.ndarray:
    """Classical kernel between the rows of ``A`` and the rows of ``B``."""
    if spec.kind == PRECOMPUTED:
        raise ValidationError("a PRECOMPUTED kernel has no evaluation rule")
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise ValidationError(f"feature dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if spec.kind == LINEAR:
        return A @ B.T
    gamma = spec.gamma if spec.gamma is not None else 1.0 / A.shape[1]
    if spec.kind == RBF:
        sq = (A**2).sum(1)[:, None] + (B**2).sum(1)[None, :] - 2.0 * (A @ B.T)
        return np.exp(-gamma * np.maximum(sq, 0.0))
    return (gamma * (A @ B.T) + spec.coef0) ** spec.degree


@dataclass
class SvmModel:
    alphas: np.ndarray
    bias: float
    labels: np.ndarray  # signed
    kernel: KernelSpec
    C: float
    train_X: np.ndarray | None = None  # None for PRECOMPUTED
    converged: bool = True
    sweeps: int = 0
    objective_trace: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.alphas > 0)

    @property
    def n_train(self) -> int:
        return self.alphas.shape[0]

    def dual_objective(self, K: np.ndarray) -> float:
        ay = self.alphas * self.labels
        return float(self.alphas.sum() - 0.5 * ay @ K @ ay)


def train_smo(X, y, kernel: KernelSpec = KernelSpec(), C: float = 1.0, tol: float = 1e-3,
              max_passes: int = 10, seed: int = 0, max_sweeps: int = 10_000,
              check_objective: bool = False) -> SvmModel:
    """Fit the dual by simplified SMO.

    ``X`` is a sample matrix, or the square training Gram matrix when
    ``kernel.kind`` is PRECOMPUTED.  ``y`` holds -1/+1 labels.  With
    ``check_objective`` every accepted pair update is verified not to
    decrease the dual objective.
    """
    y = np.asarray(y, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if y.ndim != 1 or y.size < 2:
        raise ValidationError("need at least 2 labelled samples")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValidationError("labels must be -1 or +1")
    if np.unique(y).size < 2:
        raise ValidationError("both classes must be present in y")
    if not C > 0:
        raise ValidationError(f"C must be positive, got {C}")
    if kernel.kind == PRECOMPUTED:
        if X.ndim != 2 or X.shape[0] != X.shape[1]:
            raise ValidationError(f"precomputed Gram matrix must be square, got shape {X.shape}")
        if X.shape[0] != y.size:
            raise ValidationError(f"Gram size {X.shape[0]} does not match {y.size} labels")
        K = np.ascontiguousarray(X)
        train_X = None
    else:
        if X.ndim != 2 or X.shape[0] != y.size:
            raise ValidationError(f"X shape {X.shape} does not match {y.size} labels")
        kernel = kernel.resolved(X)
        K = kernel_matrix(kernel, X, X)
        train_X = X.copy()

    alphas, bias, trace, sweeps, converged = _kernels.smo(
        K, y, float(C), float(tol), int(max_passes), int(max_sweeps), int(seed)
    )
    if check_objective:
        steps = np.diff(trace)
        scale = 1e-12 * (1.0 + np.abs(trace[1:]))
        bad = np.flatnonzero(steps < -scale)
        if bad.size:
            raise NumericalError(
                f"dual objective decreased at update {bad[0] + 1}: {steps[bad[0]]:.3e}"
            )
    return SvmModel(alphas, float(bias), y.copy(), kernel, float(C), train_X,
                    bool(converged), int(sweeps), trace)


def _kernel_rows(model: SvmModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if model.kernel.kind == PRECOMPUTED:
        X = np.atleast_2d(X)
        if X.shape[1] != model.n_train:
            raise ValidationError(
                f"kernel rows must have {model.n_train} entries (training size), got {X.shape[1]}"
            )
        return X
    X = np.atleast_2d(X)
    if X.shape[1] != model.train_X.shape[1]:
        raise ValidationError(
            f"expected {model.train_X.shape[1]} features, got {X.shape[1]}"
        )
    return X


def decision_values(model: SvmModel, X) -> np.ndarray:
    """Raw margins sum_i alpha_i y_i k(x_i, x) + b, one per sample (or kernel row)."""
    rows = _kernel_rows(model, X)
    sv = model.support
    coef = model.alphas[sv] * model.labels[sv]
    if model.kernel.kind == PRECOMPUTED:
        k = rows[:, sv]
    else:
        k = kernel_matrix(model.kernel, rows, model.train_X[sv])
    return k @ coef + model.bias


def predict(model: SvmModel, X) -> np.ndarray:
    """-1/+1 labels; a margin of exactly zero maps to +1."""
    return np.where(decision_values(model, X) >= 0.0, 1, -1)


def save_model(model: SvmModel, path) -> None:
    """Write the model as JSON tagged ``svm-v1``.

    Floats go through ``repr`` so a save/load round trip is exact.
    """
    doc = {
        "format": FORMAT_TAG,
        "kernel": model.kernel.as_dict(),
        "C": model.C,
        "bias": model.bias,
        "alphas": model.alphas.tolist(),
        "labels": model.labels.tolist(),
        "converged": model.converged,
        "sweeps": model.sweeps,
    }
    if model.train_X is not None:
        doc["train_X"] = model.train_X.tolist()
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_model(path) -> SvmModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != FORMAT_TAG:
        raise ValidationError(f"not an {FORMAT_TAG} model file: format={doc.get('format')!r}")
    kernel = KernelSpec(**doc["kernel"])
    train_X = np.array(doc["train_X"], dtype=np.float64) if "train_X" in doc else None
    return SvmModel(
        alphas=np.array(doc["alphas"], dtype=np.float64),
        bias=float(doc["bias"]),
        labels=np.array(doc["labels"], dtype=np.float64),
        kernel=kernel,
        C=float(doc["C"]),
        train_X=train_X,
        converged=bool(doc.get("converged", True)),
        sweeps=int(doc.get("sweeps", 0)),
    )
