import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmlhealth import svm
from qmlhealth.errors import NumericalError, ValidationError
from qmlhealth.svm import LINEAR, POLY, PRECOMPUTED, RBF, KernelSpec

XOR_X = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], dtype=float)
XOR_Y = np.array([-1, -1, 1, 1])


def blobs(n=200, seed=7):
    rng = np.random.default_rng(seed)
    y = np.where(np.arange(n) < n // 2, 1, -1)
    X = rng.normal(size=(n, 2)) + y[:, None] * np.array([1.0, 1.0])
    return X, y


def assert_dual_feasible(model):
    assert model.alphas.min() >= 0
    assert model.alphas.max() <= model.C
    assert abs(np.sum(model.alphas * model.labels)) < 1e-6


@pytest.fixture
def pair_model():
    return svm.train_smo([[-1.0], [1.0]], [-1, 1], KernelSpec(LINEAR), C=1.0)


def test_kernel_eval_examples():
    assert svm.kernel_eval(KernelSpec(LINEAR), [1, 2], [3, 4]) == 11
    assert svm.kernel_eval(KernelSpec(RBF, gamma=3.7), [0.3, -2], [0.3, -2]) == 1.0
    assert svm.kernel_eval(KernelSpec(RBF, gamma=0.5), [0, 0], [2, 0]) == pytest.approx(math.exp(-2), rel=1e-15)
    assert svm.kernel_eval(KernelSpec(POLY, gamma=1.0, degree=2, coef0=1.0), [1, 2], [3, 4]) == 144


def test_kernel_spec_validation():
    with pytest.raises(ValidationError):
        KernelSpec("SIGMOID")
    with pytest.raises(ValidationError):
        KernelSpec(RBF, gamma=0.0)
    with pytest.raises(ValidationError):
        KernelSpec(RBF, gamma=-1.0)


def test_kernel_matrix_matches_eval(rng):
    A, B = rng.normal(size=(4, 3)), rng.normal(size=(5, 3))
    for spec in (KernelSpec(LINEAR), KernelSpec(RBF, gamma=0.3), KernelSpec(POLY, gamma=0.5, coef0=1.0)):
        K = svm.kernel_matrix(spec, A, B)
        for i in range(4):
            for j in range(5):
                assert K[i, j] == pytest.approx(svm.kernel_eval(spec, A[i], B[j]), rel=1e-12, abs=1e-14)


def test_default_gamma_from_variance(rng):
    X = rng.normal(scale=2.0, size=(50, 4))
    spec = KernelSpec(RBF).resolved(X)
    assert spec.gamma == pytest.approx(1.0 / (4 * X.var()))


def test_label_conversion():
    np.testing.assert_array_equal(svm.to_signed([0, 1, 1, 0]), [-1, 1, 1, -1])
    np.testing.assert_array_equal(svm.from_signed([-1, 1]), [0, 1])


def test_symmetric_pair(backend, pair_model):
    assert svm.predict(pair_model, [[-0.5]])[0] == -1
    assert svm.predict(pair_model, [[0.5]])[0] == 1
    assert abs(svm.decision_values(pair_model, [[0.0]])[0]) < 1e-9
    assert_dual_feasible(pair_model)


def test_tie_goes_positive():
    model = svm.SvmModel(np.array([1.0, 1.0]), 0.0, np.array([-1.0, 1.0]), KernelSpec(LINEAR),
                         1.0, np.array([[-1.0], [1.0]]))
    assert svm.decision_values(model, [[0.0]])[0] == 0.0
    assert svm.predict(model, [[0.0]])[0] == 1


def test_xor_rbf(backend):
    model = svm.train_smo(XOR_X, XOR_Y, KernelSpec(RBF, gamma=1.0), C=10.0, check_objective=True)
    np.testing.assert_array_equal(svm.predict(model, XOR_X), XOR_Y)
    assert model.converged
    assert_dual_feasible(model)
    assert np.all(np.diff(model.objective_trace) >= -1e-12)
    K = svm.kernel_matrix(model.kernel, XOR_X, XOR_X)
    assert model.objective_trace[-1] == pytest.approx(model.dual_objective(K), abs=1e-9)


def test_xor_precomputed_rows_predict_labels(backend):
    K = svm.kernel_matrix(KernelSpec(RBF, gamma=1.0), XOR_X, XOR_X)
    model = svm.train_smo(K, XOR_Y, KernelSpec(PRECOMPUTED), C=10.0)
    np.testing.assert_array_equal(svm.predict(model, K), XOR_Y)
    assert model.train_X is None


def test_blobs_linear(backend):
    X, y = blobs()
    model = svm.train_smo(X, y, KernelSpec(LINEAR), C=1.0, check_objective=True)
    assert np.mean(svm.predict(model, X) == y) >= 0.90
    assert_dual_feasible(model)
    d = svm.decision_values(model, [[1, 1], [0, 0], [-1, -1]])
    assert d[0] > d[1] > d[2]


def test_separable_support_vectors_get_own_label():
    X = np.array([[-2.0, 0], [-1, 0.5], [-1.5, -1], [1, 0], [2, 1], [1.5, -0.5]])
    y = np.array([-1, -1, -1, 1, 1, 1])
    model = svm.train_smo(X, y, KernelSpec(LINEAR), C=100.0, tol=1e-6)
    assert model.converged and model.support.size > 0
    np.testing.assert_array_equal(svm.predict(model, X[model.support]), y[model.support])


def test_precomputed_equivalence(backend, rng):
    X, y = blobs(60, seed=3)
    spec = KernelSpec(RBF, gamma=0.7)
    direct = svm.train_smo(X, y, spec, seed=11)
    pre = svm.train_smo(svm.kernel_matrix(spec, X, X), y, KernelSpec(PRECOMPUTED), seed=11)
    np.testing.assert_array_equal(svm.predict(direct, X),
                                  svm.predict(pre, svm.kernel_matrix(spec, X, X)))
    np.testing.assert_array_equal(direct.alphas, pre.alphas)


def test_backends_agree(rng):
    from conftest import BACKENDS
    X, y = blobs(80, seed=5)
    K = svm.kernel_matrix(KernelSpec(RBF, gamma=0.5), X, X)
    yf = y.astype(float)
    runs = [b[2](K, yf, 1.0, 1e-3, 10, 10_000, 3) for b in BACKENDS.values()]
    a, b = runs[0], runs[-1]
    np.testing.assert_allclose(a[0], b[0], atol=1e-12)
    assert a[1] == pytest.approx(b[1], abs=1e-12)
    assert a[3] == b[3]


def test_seed_determinism():
    X, y = blobs(80, seed=2)
    a = svm.train_smo(X, y, KernelSpec(RBF, gamma=0.5), seed=9)
    b = svm.train_smo(X, y, KernelSpec(RBF, gamma=0.5), seed=9)
    np.testing.assert_array_equal(a.alphas, b.alphas)
    assert a.bias == b.bias


def test_objective_check_raises_on_indefinite_kernel():
    # a non-PSD "kernel" breaks the ascent guarantee
    K = np.array([[1.0, 3.0, -2.0], [3.0, 1.0, 2.5], [-2.0, 2.5, 1.0]])
    y = np.array([1, -1, 1])
    try:
        svm.train_smo(K, y, KernelSpec(PRECOMPUTED), C=5.0, check_objective=True)
    except NumericalError:
        pass  # the check fired; either outcome is allowed, a silent decrease is not
    else:
        m = svm.train_smo(K, y, KernelSpec(PRECOMPUTED), C=5.0)
        assert np.all(np.diff(m.objective_trace) >= -1e-12 * (1 + np.abs(m.objective_trace[1:])))


def test_max_sweeps_guard():
    X, y = blobs(60, seed=4)
    model = svm.train_smo(X, y, KernelSpec(RBF, gamma=0.5), max_sweeps=1, max_passes=5)
    assert model.sweeps == 1 and not model.converged
    assert_dual_feasible(model)


@pytest.mark.parametrize("X,y,kernel,msg", [
    ([[0.0], [1.0]], [1, 1], KernelSpec(LINEAR), "both classes"),
    ([[0.0], [1.0]], [0, 1], KernelSpec(LINEAR), "-1 or \\+1"),
    ([[0.0]], [1], KernelSpec(LINEAR), "at least 2"),
    ([[0.0], [1.0], [2.0]], [1, -1], KernelSpec(LINEAR), "does not match"),
    (np.ones((2, 3)), [1, -1], KernelSpec(PRECOMPUTED), "square"),
])
def test_train_errors(X, y, kernel, msg):
    with pytest.raises(ValidationError, match=msg):
        svm.train_smo(X, y, kernel)


def test_train_rejects_bad_C():
    with pytest.raises(ValidationError):
        svm.train_smo([[0.0], [1.0]], [-1, 1], C=0.0)


def test_predict_feature_mismatch(pair_model):
    with pytest.raises(ValidationError):
        svm.predict(pair_model, [[0.0, 1.0]])


def test_persistence_roundtrip(tmp_path):
    X, y = blobs(50, seed=8)
    model = svm.train_smo(X, y, KernelSpec(RBF))
    path = tmp_path / "model.json"
    svm.save_model(model, path)
    loaded = svm.load_model(path)
    assert loaded.kernel == model.kernel
    np.testing.assert_array_equal(loaded.alphas, model.alphas)
    np.testing.assert_array_equal(svm.decision_values(loaded, X), svm.decision_values(model, X))


def test_load_rejects_unknown_format(tmp_path):
    path = tmp_path / "m.json"
    path.write_text('{"format": "other"}')
    with pytest.raises(ValidationError):
        svm.load_model(path)


# --- properties -----------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(4, 30),
       kind=st.sampled_from([LINEAR, RBF]), C=st.floats(0.1, 10))
def test_dual_feasibility_and_ascent(seed, n, kind, C):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    y = np.where(np.arange(n) % 2 == 0, 1, -1)
    model = svm.train_smo(X, y, KernelSpec(kind, gamma=0.5 if kind == RBF else None), C=C,
                          seed=seed, check_objective=True)
    assert_dual_feasible(model)
    d = svm.decision_values(model, X)
    np.testing.assert_array_equal(np.where(d >= 0, 1, -1), svm.predict(model, X))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(4, 30))
def test_label_flip_symmetry(seed, n):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    y = np.where(rng.random(n) < 0.5, 1, -1)
    y[:2] = (1, -1)
    spec = KernelSpec(RBF, gamma=0.8)
    a = svm.train_smo(X, y, spec, seed=seed)
    b = svm.train_smo(X, -y, spec, seed=seed)
    np.testing.assert_allclose(svm.decision_values(b, X), -svm.decision_values(a, X), atol=1e-9)
