"""Hot numeric kernels, each in a numba loop form and a numpy form.

Gate programs are flat arrays so the same compiled kernel serves single
states, feature-map batches and quanvolution patches:

    kinds[g]   gate code (H, RX, RY, RZ, CNOT, CZ below)
    wire0[g]   target for 1-qubit gates, control for 2-qubit gates
    wire1[g]   target for 2-qubit gates, ignored otherwise
    angles[b, g]  rotation angle of gate g for batch row b

Qubit ``q`` is bit ``q`` of the amplitude index (qubit 0 least significant).
The public names at the bottom resolve to one backend according to
:data:`qmlhealth._accel.USE_NUMBA`; both forms stay importable for tests and
benchmarks.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, njit
from .rng import GOLDEN_GAMMA, INV_2_53, MIX1, MIX2, SplitMix64

H, RX, RY, RZ, CNOT, CZ = 0, 1, 2, 3, 4, 5
INV_SQRT2 = 1.0 / math.sqrt(2.0)

# smallest alpha_j move SMO accepts as progress
SMO_MIN_STEP = 1e-5


# --------------------------------------------------------------------------
# gate programs
# --------------------------------------------------------------------------


@njit
def _run_program_numba(amps, kinds, wire0, wire1, angles):
    n_batch, dim = amps.shape
    n_gates = kinds.shape[0]
    for b in range(n_batch):
        for g in range(n_gates):
            kind = kinds[g]
            if kind <= RZ:
                stride = 1 << wire0[g]
                half = 0.5 * angles[b, g]
                c = math.cos(half)
                s = math.sin(half)
                for i in range(dim):
                    if i & stride:
                        continue
                    j = i | stride
                    a0 = amps[b, i]
                    a1 = amps[b, j]
                    if kind == H:
                        amps[b, i] = (a0 + a1) * INV_SQRT2
                        amps[b, j] = (a0 - a1) * INV_SQRT2
                    elif kind == RX:
                        amps[b, i] = c * a0 - 1j * s * a1
                        amps[b, j] = -1j * s * a0 + c * a1
                    elif kind == RY:
                        amps[b, i] = c * a0 - s * a1
                        amps[b, j] = s * a0 + c * a1
                    else:
                        amps[b, i] = a0 * complex(c, -s)
                        amps[b, j] = a1 * complex(c, s)
            elif kind == CNOT:
                cbit = 1 << wire0[g]
                tbit = 1 << wire1[g]
                for i in range(dim):
                    if (i & cbit) and not (i & tbit):
                        j = i | tbit
                        tmp = amps[b, i]
                        amps[b, i] = amps[b, j]
                        amps[b, j] = tmp
            else:
                mask = (1 << wire0[g]) | (1 << wire1[g])
                for i in range(dim):
                    if (i & mask) == mask:
                        amps[b, i] = -amps[b, i]


def _run_program_numpy(amps, kinds, wire0, wire1, angles):
    n_batch, dim = amps.shape
    index = np.arange(dim)
    for g in range(kinds.shape[0]):
        kind = int(kinds[g])
        if kind <= RZ:
            t = int(wire0[g])
            view = amps.reshape(n_batch, dim >> (t + 1), 2, 1 << t)
            a0 = view[:, :, 0, :].copy()
            a1 = view[:, :, 1, :].copy()
            half = 0.5 * angles[:, g][:, None, None]
            c = np.cos(half)
            s = np.sin(half)
            if kind == H:
                view[:, :, 0, :] = (a0 + a1) * INV_SQRT2
                view[:, :, 1, :] = (a0 - a1) * INV_SQRT2
            elif kind == RX:
                view[:, :, 0, :] = c * a0 - 1j * s * a1
                view[:, :, 1, :] = -1j * s * a0 + c * a1
            elif kind == RY:
                view[:, :, 0, :] = c * a0 - s * a1
                view[:, :, 1, :] = s * a0 + c * a1
            else:
                view[:, :, 0, :] = a0 * (c - 1j * s)
                view[:, :, 1, :] = a1 * (c + 1j * s)
        elif kind == CNOT:
            cbit = 1 << int(wire0[g])
            tbit = 1 << int(wire1[g])
            lo = index[((index & cbit) != 0) & ((index & tbit) == 0)]
            hi = lo | tbit
            tmp = amps[:, lo].copy()
            amps[:, lo] = amps[:, hi]
            amps[:, hi] = tmp
        else:
            mask = (1 << int(wire0[g])) | (1 << int(wire1[g]))
            amps[:, (index & mask) == mask] *= -1.0


@njit
def _z_expectations_numba(amps, n_qubits):
    n_batch, dim = amps.shape
    out = np.zeros((n_batch, n_qubits))
    for b in range(n_batch):
        for i in range(dim):
            a = amps[b, i]
            p = a.real * a.real + a.imag * a.imag
            for w in range(n_qubits):
                if (i >> w) & 1:
                    out[b, w] -= p
                else:
                    out[b, w] += p
    return out


def _z_expectations_numpy(amps, n_qubits):
    dim = amps.shape[1]
    index = np.arange(dim)
    signs = 1.0 - 2.0 * ((index[None, :] >> np.arange(n_qubits)[:, None]) & 1)
    probs = amps.real**2 + amps.imag**2
    return probs @ signs.T


# --------------------------------------------------------------------------
# simplified SMO on a precomputed kernel matrix
# --------------------------------------------------------------------------


@njit
def _smo_numba(K, y, C, tol, max_passes, max_sweeps, seed):
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = np.zeros(n)  # grad[k] = sum_m alpha_m y_m K[k, m]
    b = 0.0
    objective = 0.0
    trace = [0.0]
    state = np.uint64(seed)
    gamma = np.uint64(GOLDEN_GAMMA)
    m1 = np.uint64(MIX1)
    m2 = np.uint64(MIX2)
    passes = 0
    sweeps = 0
    while passes < max_passes and sweeps < max_sweeps:
        changed = 0
        for i in range(n):
            e_i = grad[i] + b - y[i]
            r_i = y[i] * e_i
            if not ((r_i < -tol and alpha[i] < C) or (r_i > tol and alpha[i] > 0.0)):
                continue
            state = state + gamma
            z = state
            z = (z ^ (z >> np.uint64(30))) * m1
            z = (z ^ (z >> np.uint64(27))) * m2
            z = z ^ (z >> np.uint64(31))
            j = int(float(z >> np.uint64(11)) * INV_2_53 * (n - 1))
            if j > n - 2:
                j = n - 2
            if j >= i:
                j += 1
            e_j = grad[j] + b - y[j]
            ai_old = alpha[i]
            aj_old = alpha[j]
            if y[i] != y[j]:
                lo = max(0.0, aj_old - ai_old)
                hi = min(C, C + aj_old - ai_old)
            else:
                lo = max(0.0, ai_old + aj_old - C)
                hi = min(C, ai_old + aj_old)
            if lo >= hi:
                continue
            eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
            if eta >= 0.0:
                continue
            aj = aj_old - y[j] * (e_i - e_j) / eta
            if aj > hi:
                aj = hi
            elif aj < lo:
                aj = lo
            if abs(aj - aj_old) < SMO_MIN_STEP:
                continue
            ai = ai_old + y[i] * y[j] * (aj_old - aj)
            if ai < 0.0:
                ai = 0.0
            elif ai > C:
                ai = C
            d_i = ai - ai_old
            d_j = aj - aj_old
            b1 = b - e_i - y[i] * d_i * K[i, i] - y[j] * d_j * K[i, j]
            b2 = b - e_j - y[i] * d_i * K[i, j] - y[j] * d_j * K[j, j]
            if 0.0 < ai < C:
                b = b1
            elif 0.0 < aj < C:
                b = b2
            else:
                b = 0.5 * (b1 + b2)
            objective += (
                d_i
                + d_j
                - y[i] * grad[i] * d_i
                - y[j] * grad[j] * d_j
                - 0.5
                * (
                    K[i, i] * d_i * d_i
                    + 2.0 * y[i] * y[j] * K[i, j] * d_i * d_j
                    + K[j, j] * d_j * d_j
                )
            )
            trace.append(objective)
            alpha[i] = ai
            alpha[j] = aj
            s_i = y[i] * d_i
            s_j = y[j] * d_j
            for k in range(n):
                grad[k] += K[i, k] * s_i
            for k in range(n):
                grad[k] += K[j, k] * s_j
            changed += 1
        sweeps += 1
        if changed == 0:
            passes += 1
        else:
            passes = 0
    return alpha, b, np.array(trace), sweeps, passes >= max_passes


def _smo_numpy(K, y, C, tol, max_passes, max_sweeps, seed):
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = np.zeros(n)
    b = 0.0
    objective = 0.0
    trace = [0.0]
    rng = SplitMix64(seed)
    passes = 0
    sweeps = 0
    while passes < max_passes and sweeps < max_sweeps:
        changed = 0
        for i in range(n):
            e_i = grad[i] + b - y[i]
            r_i = y[i] * e_i
            if not ((r_i < -tol and alpha[i] < C) or (r_i > tol and alpha[i] > 0.0)):
                continue
            j = min(int(rng.uniform() * (n - 1)), n - 2)
            if j >= i:
                j += 1
            e_j = grad[j] + b - y[j]
            ai_old = alpha[i]
            aj_old = alpha[j]
            if y[i] != y[j]:
                lo = max(0.0, aj_old - ai_old)
                hi = min(C, C + aj_old - ai_old)
            else:
                lo = max(0.0, ai_old + aj_old - C)
                hi = min(C, ai_old + aj_old)
            if lo >= hi:
                continue
            eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
            if eta >= 0.0:
                continue
            aj = min(max(aj_old - y[j] * (e_i - e_j) / eta, lo), hi)
            if abs(aj - aj_old) < SMO_MIN_STEP:
                continue
            ai = min(max(ai_old + y[i] * y[j] * (aj_old - aj), 0.0), C)
            d_i = ai - ai_old
            d_j = aj - aj_old
            b1 = b - e_i - y[i] * d_i * K[i, i] - y[j] * d_j * K[i, j]
            b2 = b - e_j - y[i] * d_i * K[i, j] - y[j] * d_j * K[j, j]
            if 0.0 < ai < C:
                b = b1
            elif 0.0 < aj < C:
                b = b2
            else:
                b = 0.5 * (b1 + b2)
            objective += (
                d_i
                + d_j
                - y[i] * grad[i] * d_i
                - y[j] * grad[j] * d_j
                - 0.5
                * (
                    K[i, i] * d_i * d_i
                    + 2.0 * y[i] * y[j] * K[i, j] * d_i * d_j
                    + K[j, j] * d_j * d_j
                )
            )
            trace.append(objective)
            alpha[i] = ai
            alpha[j] = aj
            grad += K[i] * (y[i] * d_i)
            grad += K[j] * (y[j] * d_j)
            changed += 1
        sweeps += 1
        passes = passes + 1 if changed == 0 else 0
    return alpha, b, np.array(trace), sweeps, passes >= max_passes


if USE_NUMBA:
    run_program = _run_program_numba
    z_expectations = _z_expectations_numba
    smo = _smo_numba
else:
    run_program = _run_program_numpy
    z_expectations = _z_expectations_numpy
    smo = _smo_numpy
