"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--samples 200] [--qubits 10]

Both backends are called directly, so the QMLHEALTH_DISABLE_NUMBA flag does
not matter here.  The first numba call (compilation or cache load) is done
before timing starts.
"""

import argparse
import time

import numpy as np

from qmlhealth import _accel, _kernels, featmap, qsim, quanv, svm


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def with_backend(run, zexp, smo, fn):
    saved = _kernels.run_program, _kernels.z_expectations, _kernels.smo
    _kernels.run_program, _kernels.z_expectations, _kernels.smo = run, zexp, smo
    try:
        return fn()
    finally:
        _kernels.run_program, _kernels.z_expectations, _kernels.smo = saved


def cases(args):
    rng = np.random.default_rng(0)
    spec = featmap.FeatureMapSpec(featmap.ANGLE, args.qubits, 3)
    X = rng.uniform(0, 0.3, size=(args.samples, 21))

    def prepare():
        featmap.feature_states(spec, X)

    def gram():
        featmap.gram_matrix(spec, X)

    Xs = rng.normal(size=(args.samples, 4))
    ys = np.where(Xs[:, 0] + 0.3 * rng.normal(size=args.samples) > 0, 1, -1)
    K = svm.kernel_matrix(svm.KernelSpec(svm.RBF, gamma=0.3), Xs, Xs)

    def smo():
        svm.train_smo(K, ys, svm.KernelSpec(svm.PRECOMPUTED))

    images = rng.random((8, 28, 28))
    qv = quanv.Quanvolver()

    def quanvolve():
        qv.batch(images)

    return {
        f"feature states ({args.samples} x {args.qubits} qubits)": prepare,
        f"gram matrix ({args.samples}^2)": gram,
        f"smo ({args.samples} samples)": smo,
        "quanvolution (8 images 28x28)": quanvolve,
    }


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--qubits", type=int, default=10)
    args = p.parse_args()

    backends = {"numpy": (_kernels._run_program_numpy, _kernels._z_expectations_numpy,
                          _kernels._smo_numpy)}
    if _accel.HAVE_NUMBA:
        backends["numba"] = (_kernels._run_program_numba, _kernels._z_expectations_numba,
                             _kernels._smo_numba)
    else:
        print("numba not importable; timing the numpy path only")

    work = cases(args)
    print(f"{'case':<40}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in work.items():
        row = {}
        for b, fns in backends.items():
            with_backend(*fns, fn)  # warm-up / JIT
            row[b] = with_backend(*fns, lambda: best_of(fn, args.repeat))
        speed = f"{row['numpy'] / row['numba']:>9.2f}x" if "numba" in row else ""
        print(f"{name:<40}" + "".join(f"{row[b] * 1e3:>10.1f}ms" for b in backends) + speed)


if __name__ == "__main__":
    main()
