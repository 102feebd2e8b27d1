import numpy as np
import pytest

from qmlhealth import _accel, _kernels, qsim, svm


@pytest.fixture
def rng():
    return np.random.default_rng(20240717)


def random_gate(rng, n, kinds=("H", "RX", "RY", "RZ", "CNOT", "CZ")):
    kind = kinds[rng.integers(len(kinds))] if n > 1 else kinds[rng.integers(4)]
    if kind in ("CNOT", "CZ"):
        a, b = rng.choice(n, size=2, replace=False)
        return qsim.Gate(kind, (int(a), int(b)))
    q = int(rng.integers(n))
    if kind == "H":
        return qsim.Gate("H", (q,))
    return qsim.Gate(kind, (q,), float(rng.uniform(-2 * np.pi, 2 * np.pi)))


def random_circuit(rng, n, n_gates):
    return qsim.Circuit(n, [random_gate(rng, n) for _ in range(n_gates)])


def random_state(rng, n):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return qsim.StateVector(n, v / np.linalg.norm(v))


BACKENDS = {"numpy": (_kernels._run_program_numpy, _kernels._z_expectations_numpy,
                      _kernels._smo_numpy)}
if _accel.HAVE_NUMBA:
    BACKENDS["numba"] = (_kernels._run_program_numba, _kernels._z_expectations_numba,
                         _kernels._smo_numba)


@pytest.fixture(params=sorted(BACKENDS))
def backend(request, monkeypatch):
    """Route the public kernels through one backend for the duration of a test."""
    run, zexp, smo = BACKENDS[request.param]
    monkeypatch.setattr(_kernels, "run_program", run)
    monkeypatch.setattr(_kernels, "z_expectations", zexp)
    monkeypatch.setattr(_kernels, "smo", smo)
    return request.param


SMO_RUNS = []


@pytest.fixture(autouse=True)
def _dual_feasibility_guard(monkeypatch):
    """Every SVM trained anywhere in the suite must satisfy the dual constraints."""
    real = svm.train_smo

    def checked(*args, **kwargs):
        model = real(*args, **kwargs)
        a = model.alphas
        assert a.min() >= 0.0 and a.max() <= model.C, "alpha outside [0, C]"
        assert abs(float(np.sum(a * model.labels))) < 1e-6, "sum(alpha*y) != 0"
        SMO_RUNS.append(model.n_train)
        return model

    monkeypatch.setattr(svm, "train_smo", checked)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
