"""Exact dense statevector simulation.

Conventions: ``RX(t) = exp(-i t X / 2)``, ``RY(t) = exp(-i t Y / 2)``,
``RZ(t) = exp(-i t Z / 2)``, and qubit 0 is the least significant bit of the
amplitude index, so for two qubits the basis order is |q1 q0> = 00, 01, 10, 11.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import CapacityError, ValidationError

MAX_QUBITS = 20

GATE_CODES = {
    "H": _kernels.H,
    "RX": _kernels.RX,
    "RY": _kernels.RY,
    "RZ": _kernels.RZ,
    "CNOT": _kernels.CNOT,
    "CZ": _kernels.CZ,
}
ROTATIONS = frozenset({"RX", "RY", "RZ"})
SINGLE_QUBIT = frozenset({"H", "RX", "RY", "RZ"})


@dataclass(frozen=True)
class Gate:
    """One gate. Two-qubit gates list the control wire first."""

    kind: str
    wires: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))
        if kind not in GATE_CODES:
            raise ValidationError(f"unknown gate kind {self.kind!r}")
        arity = 1 if kind in SINGLE_QUBIT else 2
        if len(self.wires) != arity:
            raise ValidationError(f"{kind} takes {arity} wire(s), got {self.wires}")
        if len(set(self.wires)) != len(self.wires):
            raise ValidationError(f"{kind} wires must be distinct, got {self.wires}")
        if any(w < 0 for w in self.wires):
            raise ValidationError(f"negative wire index in {self.wires}")
        if kind in ROTATIONS:
            if self.angle is None:
                raise ValidationError(f"{kind} needs an angle")
            object.__setattr__(self, "angle", float(self.angle))
        elif self.angle is not None:
            raise ValidationError(f"{kind} takes no angle")

    def check_fits(self, n_qubits: int) -> None:
        if max(self.wires) >= n_qubits:
            raise ValidationError(
                f"{self.kind} on wires {self.wires} does not fit {n_qubits} qubit(s)"
            )

    def adjoint(self) -> "Gate":
        if self.kind in ROTATIONS:
            return Gate(self.kind, self.wires, -self.angle)
        return self


# shorthand constructors
def h(q):
    return Gate("H", (q,))


def rx(q, theta):
    return Gate("RX", (q,), theta)


def ry(q, theta):
    return Gate("RY", (q,), theta)


def rz(q, theta):
    return Gate("RZ", (q,), theta)


def cnot(control, target):
    return Gate("CNOT", (control, target))


def cz(a, b):
    return Gate("CZ", (a, b))


@dataclass
class Circuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        _check_qubits(self.n_qubits)
        self.gates = list(self.gates)
        for gate in self.gates:
            gate.check_fits(self.n_qubits)

    def append(self, gate: Gate) -> "Circuit":
        gate.check_fits(self.n_qubits)
        self.gates.append(gate)
        return self

    def extend(self, gates: Iterable[Gate]) -> "Circuit":
        for gate in gates:
            self.append(gate)
        return self

    def __len__(self):
        return len(self.gates)

    def adjoint(self) -> "Circuit":
        """Reverse the gate order and negate rotation angles."""
        return Circuit(self.n_qubits, [g.adjoint() for g in reversed(self.gates)])

    def program(self) -> "Program":
        return Program.from_gates(self.gates)


@dataclass(frozen=True)
class Program:
    """Array form of a gate list, the input format of the batch kernels."""

    kinds: np.ndarray
    wire0: np.ndarray
    wire1: np.ndarray
    angles: np.ndarray

    @classmethod
    def from_gates(cls, gates: Sequence[Gate]) -> "Program":
        n = len(gates)
        kinds = np.empty(n, dtype=np.int64)
        wire0 = np.zeros(n, dtype=np.int64)
        wire1 = np.zeros(n, dtype=np.int64)
        angles = np.zeros(n, dtype=np.float64)
        for g, gate in enumerate(gates):
            kinds[g] = GATE_CODES[gate.kind]
            wire0[g] = gate.wires[0]
            if len(gate.wires) == 2:
                wire1[g] = gate.wires[1]
            if gate.angle is not None:
                angles[g] = gate.angle
        return cls(kinds, wire0, wire1, angles)

    def __len__(self):
        return self.kinds.shape[0]


def run_batch(
    n_qubits: int,
    program: Program,
    angles: np.ndarray | None = None,
    amps: np.ndarray | None = None,
) -> np.ndarray:
    """Run one gate program over a batch of states.

    ``angles`` is a ``(batch, n_gates)`` table overriding the program's own
    angles row by row; without it a single row is simulated.  ``amps`` gives
    the initial states (modified in place); default is |0...0> per row.
    """
    _check_qubits(n_qubits)
    if angles is None:
        angles = program.angles[None, :]
    angles = np.ascontiguousarray(angles, dtype=np.float64)
    if angles.ndim != 2 or angles.shape[1] != len(program):
        raise ValidationError(
            f"angle table shape {angles.shape} does not match {len(program)} gates"
        )
    if amps is None:
        amps = np.zeros((angles.shape[0], 1 << n_qubits), dtype=np.complex128)
        amps[:, 0] = 1.0
    elif amps.shape != (angles.shape[0], 1 << n_qubits):
        raise ValidationError(f"state batch shape {amps.shape} does not match")
    if len(program):
        _kernels.run_program(amps, program.kinds, program.wire0, program.wire1, angles)
    return amps


@dataclass
class StateVector:
    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        _check_qubits(self.n_qubits)
        self.amps = np.ascontiguousarray(self.amps, dtype=np.complex128)
        if self.amps.shape != (1 << self.n_qubits,):
            raise ValidationError(
                f"{self.n_qubits} qubits need {1 << self.n_qubits} amplitudes, "
                f"got shape {self.amps.shape}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amps.copy())


def _check_qubits(n_qubits):
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise CapacityError(
            f"n_qubits must be an integer in [1, {MAX_QUBITS}], got {n_qubits!r}"
        )


def zero_state(n_qubits: int) -> StateVector:
    _check_qubits(n_qubits)
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    gate.check_fits(state.n_qubits)
    amps = state.amps.copy()[None, :]
    run_batch(state.n_qubits, Program.from_gates([gate]), amps=amps)
    return StateVector(state.n_qubits, amps[0])


def apply_circuit(state: StateVector, circuit: Circuit) -> StateVector:
    if circuit.n_qubits != state.n_qubits:
        raise ValidationError(
            f"circuit has {circuit.n_qubits} qubits, state has {state.n_qubits}"
        )
    amps = state.amps.copy()[None, :]
    run_batch(state.n_qubits, circuit.program(), amps=amps)
    return StateVector(state.n_qubits, amps[0])


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    if a.n_qubits != b.n_qubits:
        raise ValidationError(f"qubit counts differ: {a.n_qubits} vs {b.n_qubits}")
    return complex(np.vdot(a.amps, b.amps))


def z_expectation(state: StateVector, wire: int) -> float:
    if not 0 <= wire < state.n_qubits:
        raise ValidationError(f"wire {wire} out of range for {state.n_qubits} qubits")
    return float(z_expectations(state.amps[None, :], state.n_qubits)[0, wire])


def z_expectations(amps: np.ndarray, n_qubits: int) -> np.ndarray:
    """Per-row, per-wire <Z> for a ``(batch, 2**n)`` amplitude array."""
    out = _kernels.z_expectations(np.ascontiguousarray(amps), n_qubits)
    return np.clip(out, -1.0, 1.0)
