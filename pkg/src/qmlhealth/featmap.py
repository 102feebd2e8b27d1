"""Feature-map circuits and the fidelity kernel built on them.

Two encodings are provided; inputs are expected already scaled to [0, pi].

ANGLE
    per layer: ``RY(x_i)`` on qubit ``i mod n_qubits`` for every feature
    ``i``, then a ring of CNOTs ``q -> q+1``.
ZZ
    per layer: ``H`` on every qubit, ``RZ(x_q)`` per qubit, then for each
    ring pair ``(q, q+1)``: ``CNOT, RZ((pi - x_q)(pi - x_{q+1})), CNOT``.
    Layer ``l`` feeds qubit ``q`` with feature ``(l * n_qubits + q) mod F`` so
    features beyond the qubit count are re-uploaded in later layers.

The ring is empty on one qubit, the single pair (0, 1) on two qubits, and
``n_qubits`` pairs (wrapping) from three qubits on.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import qsim
from .errors import RangeError, ValidationError
from .qsim import Circuit, Gate

ANGLE = "ANGLE"
ZZ = "ZZ"
KINDS = (ANGLE, ZZ)
RANGE_SLACK = 1e-9
DEFAULT_MAX_QUBITS = 10
# cap on cached row+column state memory before Gram falls back to blocks
DEFAULT_MEMORY_CAP_BYTES = 1 << 30


@dataclass(frozen=True)
class FeatureMapSpec:
    kind: str = ANGLE
    n_qubits: int = 2
    n_layers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", self.kind.upper())
        if self.kind not in KINDS:
            raise ValidationError(f"feature map kind must be one of {KINDS}, got {self.kind!r}")
        if not 1 <= self.n_qubits <= qsim.MAX_QUBITS:
            raise ValidationError(f"n_qubits must be in [1, {qsim.MAX_QUBITS}], got {self.n_qubits}")
        if self.n_layers < 1:
            raise ValidationError(f"n_layers must be >= 1, got {self.n_layers}")

    @classmethod
    def default_for(cls, n_features: int, kind: str = ANGLE,
                    max_qubits: int = DEFAULT_MAX_QUBITS) -> "FeatureMapSpec":
        """min(F, max_qubits) qubits and enough layers to cover every feature."""
        n_qubits = min(n_features, max_qubits)
        return cls(kind, n_qubits, math.ceil(n_features / n_qubits))

    def as_dict(self) -> dict:
        return {"kind": self.kind, "n_qubits": self.n_qubits, "n_layers": self.n_layers}


def ring_pairs(n_qubits: int) -> list[tuple[int, int]]:
    if n_qubits == 1:
        return []
    if n_qubits == 2:
        return [(0, 1)]
    return [(q, (q + 1) % n_qubits) for q in range(n_qubits)]


def gate_count(spec: FeatureMapSpec, n_features: int) -> int:
    ring = len(ring_pairs(spec.n_qubits))
    if spec.kind == ANGLE:
        per_layer = n_features + ring
    else:
        per_layer = 2 * spec.n_qubits + 3 * ring
    return spec.n_layers * per_layer


def _check_features(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValidationError(f"feature vector must be 1-D and non-empty, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise RangeError("feature vector contains non-finite values")
    lo, hi = x.min(), x.max()
    if lo < -RANGE_SLACK or hi > math.pi + RANGE_SLACK:
        raise RangeError(
            f"features must lie in [0, pi] (scale them first); got range [{lo}, {hi}]"
        )
    return x


def _layout(spec: FeatureMapSpec, n_features: int):
    """Gate skeleton plus, per gate, how its angle derives from the features.

    ``source[g]`` is ``("const", value)``, ``("feat", i)`` or
    ``("zz", i, j)`` meaning ``(pi - x_i)(pi - x_j)``.
    """
    gates = []
    sources = []
    pairs = ring_pairs(spec.n_qubits)
    n = spec.n_qubits
    for layer in range(spec.n_layers):
        if spec.kind == ANGLE:
            for i in range(n_features):
                gates.append(("RY", (i % n,)))
                sources.append(("feat", i))
            for a, b in pairs:
                gates.append(("CNOT", (a, b)))
                sources.append(("const", 0.0))
        else:
            feat = [(layer * n + q) % n_features for q in range(n)]
            for q in range(n):
                gates.append(("H", (q,)))
                sources.append(("const", 0.0))
            for q in range(n):
                gates.append(("RZ", (q,)))
                sources.append(("feat", feat[q]))
            for a, b in pairs:
                gates.append(("CNOT", (a, b)))
                sources.append(("const", 0.0))
                gates.append(("RZ", (b,)))
                sources.append(("zz", feat[a], feat[b]))
                gates.append(("CNOT", (a, b)))
                sources.append(("const", 0.0))
    return gates, sources


def _angle_table(sources, X: np.ndarray) -> np.ndarray:
    table = np.zeros((X.shape[0], len(sources)))
    for g, src in enumerate(sources):
        if src[0] == "feat":
            table[:, g] = X[:, src[1]]
        elif src[0] == "zz":
            table[:, g] = (math.pi - X[:, src[1]]) * (math.pi - X[:, src[2]])
        else:
            table[:, g] = src[1]
    return table


def build_feature_circuit(spec: FeatureMapSpec, x) -> Circuit:
    x = _check_features(x)
    gates, sources = _layout(spec, x.size)
    angles = _angle_table(sources, x[None, :])[0]
    out = []
    for (kind, wires), src, theta in zip(gates, sources, angles):
        out.append(Gate(kind, wires, float(theta) if kind in qsim.ROTATIONS else None))
    return Circuit(spec.n_qubits, out)


def feature_state(spec: FeatureMapSpec, x) -> qsim.StateVector:
    return qsim.apply_circuit(qsim.zero_state(spec.n_qubits), build_feature_circuit(spec, x))


def feature_states(spec: FeatureMapSpec, X, threads: int = 1) -> np.ndarray:
    """``(n_samples, 2**n_qubits)`` embedded states for the rows of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValidationError(f"sample set must be a non-empty 2-D array, got shape {X.shape}")
    for row in X:
        _check_features(row)
    gates, sources = _layout(spec, X.shape[1])
    program = qsim.Program.from_gates(
        [Gate(k, w, 0.0 if k in qsim.ROTATIONS else None) for k, w in gates]
    )
    table = _angle_table(sources, X)
    if threads <= 1 or X.shape[0] < 2 * threads:
        return qsim.run_batch(spec.n_qubits, program, table)
    chunks = np.array_split(np.arange(X.shape[0]), threads)
    with ThreadPoolExecutor(threads) as pool:
        parts = pool.map(lambda idx: qsim.run_batch(spec.n_qubits, program, table[idx]), chunks)
        return np.concatenate(list(parts), axis=0)


def quantum_kernel(spec: FeatureMapSpec, x, z) -> float:
    """Fidelity |<psi(z)|psi(x)>|^2 of the two embedded states."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if x.shape != z.shape:
        raise ValidationError(f"feature lengths differ: {x.shape} vs {z.shape}")
    overlap = qsim.inner_product(feature_state(spec, z), feature_state(spec, x))
    return min(1.0, abs(overlap) ** 2)


@dataclass
class GramMatrix:
    values: np.ndarray
    spec: FeatureMapSpec
    symmetric: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def row_count(self) -> int:
        return self.values.shape[0]

    @property
    def col_count(self) -> int:
        return self.values.shape[1]

    def to_csv(self, path) -> None:
        """Row-major, no header, 17 significant digits."""
        with open(path, "w", encoding="utf-8") as fh:
            for row in self.values:
                fh.write(",".join(f"{v:.17g}" for v in row))
                fh.write("\n")


def read_gram_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def _fidelity(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    overlap = rows.conj() @ cols.T
    return np.minimum(overlap.real**2 + overlap.imag**2, 1.0)


def gram_matrix(spec: FeatureMapSpec, rows, cols=None, *, threads: int = 1,
                memory_cap_bytes: int = DEFAULT_MEMORY_CAP_BYTES) -> GramMatrix:
    """Fidelity Gram matrix between two sample sets.

    Passing ``cols=None`` (or the very same array) marks the square case:
    only the upper triangle is evaluated and mirrored, which makes the result
    exactly symmetric.  Embedded states are prepared once per sample unless
    they would exceed ``memory_cap_bytes``; then states are rebuilt block by
    block.
    """
    rows = np.asarray(rows, dtype=np.float64)
    same = cols is None or cols is rows
    cols = rows if same else np.asarray(cols, dtype=np.float64)
    if rows.ndim != 2 or cols.ndim != 2:
        raise ValidationError("sample sets must be 2-D arrays")
    if rows.shape[1] != cols.shape[1]:
        raise ValidationError(
            f"feature dimension mismatch: rows have {rows.shape[1]}, cols have {cols.shape[1]}"
        )
    state_bytes = 16 << spec.n_qubits
    n_states = rows.shape[0] + (0 if same else cols.shape[0])
    if n_states * state_bytes <= memory_cap_bytes:
        row_states = feature_states(spec, rows, threads)
        col_states = row_states if same else feature_states(spec, cols, threads)
        values = _fidelity(row_states, col_states)
        blocked = False
    else:
        block = max(1, memory_cap_bytes // (2 * state_bytes))
        values = np.empty((rows.shape[0], cols.shape[0]))
        for r0 in range(0, rows.shape[0], block):
            rs = feature_states(spec, rows[r0:r0 + block], threads)
            c_start = r0 if same else 0
            for c0 in range(c_start, cols.shape[0], block):
                cs = feature_states(spec, cols[c0:c0 + block], threads)
                values[r0:r0 + block, c0:c0 + block] = _fidelity(rs, cs)
        blocked = True
    if same:
        upper = np.triu(values)
        values = upper + np.triu(values, 1).T
    return GramMatrix(values, spec, symmetric=same, meta={"blocked": blocked})
