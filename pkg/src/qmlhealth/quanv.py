"""Quanvolution: a fixed random 4-qubit circuit slid over 2x2 image patches.

Each patch's pixels ``p_k`` (row-major within the patch) are encoded as
``RY(pi * p_k)`` on qubit ``k``, the shared random circuit is applied, and the
four ``<Z_k>`` values become output channels ``k``.

The random circuit comes from SplitMix64 (see :mod:`qmlhealth.rng`) so the
same seed produces the same gates everywhere.  Draw order per layer: for each
qubit a rotation kind ``below(3)`` (RX, RY, RZ) and an angle
``2 * pi * uniform()``; then the CNOT control ``below(4)`` and target
``below(3)``, skipping past the control.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import qsim
from .errors import RangeError, ValidationError
from .qsim import Circuit, Gate
from .rng import SplitMix64

PATCH = 2
N_QUBITS = PATCH * PATCH
_ROTATIONS = ("RX", "RY", "RZ")


@dataclass(frozen=True)
class QuanvSpec:
    depth: int = 2
    seed: int = 42
    stride: int = 2
    patch_size: int = PATCH

    def __post_init__(self):
        if self.patch_size != PATCH:
            raise ValidationError(f"patch_size is fixed at {PATCH}")
        if self.stride < 1:
            raise ValidationError(f"stride must be >= 1, got {self.stride}")
        if self.depth < 0:
            raise ValidationError(f"depth must be >= 0, got {self.depth}")

    @property
    def n_qubits(self) -> int:
        return self.patch_size**2

    def as_dict(self) -> dict:
        return {"depth": self.depth, "seed": self.seed, "stride": self.stride,
                "patch_size": self.patch_size}

    def output_shape(self, height: int, width: int) -> tuple[int, int, int]:
        return ((height - self.patch_size) // self.stride + 1,
                (width - self.patch_size) // self.stride + 1,
                self.n_qubits)


def random_circuit(spec: QuanvSpec) -> Circuit:
    rng = SplitMix64(spec.seed)
    n = spec.n_qubits
    circuit = Circuit(n)
    for _ in range(spec.depth):
        for q in range(n):
            kind = _ROTATIONS[rng.below(3)]
            circuit.append(Gate(kind, (q,), 2.0 * math.pi * rng.uniform()))
        control = rng.below(n)
        target = rng.below(n - 1)
        if target >= control:
            target += 1
        circuit.append(Gate("CNOT", (control, target)))
    return circuit


def _check_image(image) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValidationError(f"image must be 2-D, got shape {image.shape}")
    if image.shape[0] < PATCH or image.shape[1] < PATCH:
        raise ValidationError(f"image {image.shape} is smaller than the {PATCH}x{PATCH} patch")
    if not np.all(np.isfinite(image)) or image.min() < 0.0 or image.max() > 1.0:
        raise RangeError("pixel values must lie in [0, 1]")
    return image


def extract_patches(image: np.ndarray, stride: int) -> np.ndarray:
    """``(out_h, out_w, 4)`` pixel patches, row-major within each patch."""
    h, w = image.shape
    out_h = (h - PATCH) // stride + 1
    out_w = (w - PATCH) // stride + 1
    ys = np.arange(out_h) * stride
    xs = np.arange(out_w) * stride
    patches = np.empty((out_h, out_w, N_QUBITS))
    for k, (dy, dx) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
        patches[:, :, k] = image[np.ix_(ys + dy, xs + dx)]
    return patches


class Quanvolver:
    """Holds the compiled program for one spec; reusable across images."""

    def __init__(self, spec: QuanvSpec = QuanvSpec()):
        self.spec = spec
        self.circuit = random_circuit(spec)
        encode = [Gate("RY", (k,), 0.0) for k in range(N_QUBITS)]
        self.program = qsim.Program.from_gates(encode + self.circuit.gates)

    def patch_features(self, pixels: np.ndarray) -> np.ndarray:
        """Z expectations for an ``(n_patches, 4)`` array of pixel values."""
        table = np.broadcast_to(self.program.angles, (pixels.shape[0], len(self.program))).copy()
        table[:, :N_QUBITS] = math.pi * pixels
        amps = qsim.run_batch(N_QUBITS, self.program, table)
        return qsim.z_expectations(amps, N_QUBITS)

    def __call__(self, image, threads: int = 1) -> np.ndarray:
        image = _check_image(image)
        patches = extract_patches(image, self.spec.stride)
        out_h, out_w, _ = patches.shape
        flat = patches.reshape(-1, N_QUBITS)
        if threads <= 1 or flat.shape[0] < 2 * threads:
            values = self.patch_features(flat)
        else:
            chunks = np.array_split(np.arange(flat.shape[0]), threads)
            with ThreadPoolExecutor(threads) as pool:
                values = np.concatenate(list(pool.map(lambda i: self.patch_features(flat[i]), chunks)))
        return values.reshape(out_h, out_w, N_QUBITS)

    def batch(self, images, threads: int = 1) -> np.ndarray:
        return np.stack([self(img, threads) for img in images])


def quanvolve(image, spec: QuanvSpec = QuanvSpec(), threads: int = 1) -> np.ndarray:
    """Feature tensor of shape ``(out_h, out_w, 4)`` with values in [-1, 1]."""
    return Quanvolver(spec)(image, threads)


# --------------------------------------------------------------------------
# tensor CSV cache
# --------------------------------------------------------------------------


def tensor_to_csv(tensor: np.ndarray, path) -> None:
    """One line per output pixel: ``y,x,c0,c1,c2,c3`` at 9 significant digits."""
    lines = ["y,x," + ",".join(f"c{k}" for k in range(tensor.shape[2]))]
    for yy in range(tensor.shape[0]):
        for xx in range(tensor.shape[1]):
            vals = ",".join(f"{v:.9g}" for v in tensor[yy, xx])
            lines.append(f"{yy},{xx},{vals}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def tensor_from_csv(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    height = int(data[:, 0].max()) + 1
    width = int(data[:, 1].max()) + 1
    tensor = np.empty((height, width, data.shape[1] - 2))
    tensor[data[:, 0].astype(int), data[:, 1].astype(int)] = data[:, 2:]
    return tensor


def cache_key(image: np.ndarray, spec: QuanvSpec) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(image, dtype=np.float64).tobytes())
    h.update(repr(image.shape).encode())
    h.update(repr(sorted(spec.as_dict().items())).encode())
    return h.hexdigest()[:32]


class TensorCache:
    """Directory of tensor CSVs keyed by (image hash, spec).

    Tensors handed out always went through the 9-digit CSV form, so a cold
    and a warm cache produce identical downstream results.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0

    def get_or_compute(self, image, quanvolver: Quanvolver, threads: int = 1) -> np.ndarray:
        path = self.root / f"{cache_key(np.asarray(image), quanvolver.spec)}.csv"
        if path.exists():
            self.hits += 1
        else:
            self.misses += 1
            tensor_to_csv(quanvolver(image, threads), path)
        return tensor_from_csv(path)
