"""The two experiment pipelines plus the manifest every run leaves behind."""

from __future__ import annotations

import hashlib
import json
import logging
import platform
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, data, featmap, metrics, nn, quanv, svm
from ._accel import backend_name
from .config import IMAGE, TABULAR, ExperimentConfig
from .errors import DataError, QmlHealthError

log = logging.getLogger(__name__)

DATA_STAGES = frozenset({"load_csv", "sample_train", "sample_test", "load_images"})


class StageError(QmlHealthError):
    """Wraps a failure with the name of the pipeline stage it came from."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause

    @property
    def is_data_error(self) -> bool:
        return self.stage in DATA_STAGES or isinstance(self.cause, (DataError, OSError))


@dataclass
class RunManifest:
    config: dict
    seeds: dict = field(default_factory=dict)
    datasets: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    status: str = "running"
    error: str | None = None
    toolkit_version: str = __version__
    backend: str = field(default_factory=backend_name)

    def as_dict(self) -> dict:
        return {
            "toolkit_version": self.toolkit_version,
            "backend": self.backend,
            "python": platform.python_version(),
            "status": self.status,
            "error": self.error,
            "config": self.config,
            "seeds": self.seeds,
            "datasets": self.datasets,
            "timings_s": self.timings,
            "artifacts": self.artifacts,
        }

    def write(self, directory) -> Path:
        path = Path(directory) / "manifest.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.as_dict(), indent=2) + "\n", encoding="utf-8")
        return path


class _Run:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.out = Path(cfg.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(config=cfg.as_dict(), seeds={"seed": cfg.seed})

    @contextmanager
    def stage(self, name):
        start = time.perf_counter()
        log.info("stage %s", name)
        try:
            yield
        except StageError:
            raise
        except Exception as exc:
            raise StageError(name, exc) from exc
        finally:
            self.manifest.timings[name] = round(time.perf_counter() - start, 6)

    def artifact(self, name) -> Path:
        self.manifest.artifacts.append(name)
        return self.out / name

    @contextmanager
    def recording(self):
        try:
            yield self
        except BaseException as exc:
            self.manifest.status = "failed"
            self.manifest.error = str(exc)
            raise
        else:
            self.manifest.status = "ok"
        finally:
            self.manifest.write(self.out)


# --------------------------------------------------------------------------
# tabular
# --------------------------------------------------------------------------


def feature_map_spec(cfg: ExperimentConfig, n_features: int) -> featmap.FeatureMapSpec:
    fm = cfg.tabular.feature_map
    default = featmap.FeatureMapSpec.default_for(n_features, fm.kind.upper(), fm.max_qubits)
    n_qubits = fm.n_qubits or default.n_qubits
    n_layers = fm.n_layers or -(-n_features // n_qubits)
    return featmap.FeatureMapSpec(fm.kind.upper(), n_qubits, n_layers)


def quantum_inputs(cfg: ExperimentConfig, X: np.ndarray) -> np.ndarray:
    """Scaled features times the configured bandwidth (stays inside [0, pi])."""
    return X * cfg.tabular.feature_map.bandwidth


def _gram_key(spec, rows: np.ndarray, cols: np.ndarray | None) -> str:
    h = hashlib.sha256()
    h.update(json.dumps(spec.as_dict(), sort_keys=True).encode())
    h.update(repr(rows.shape).encode())
    h.update(np.ascontiguousarray(rows).tobytes())
    if cols is not None:
        h.update(b"|cols|" + repr(cols.shape).encode())
        h.update(np.ascontiguousarray(cols).tobytes())
    return h.hexdigest()[:40]


def cached_gram(spec, rows, cols=None, cache_dir=None, threads=1, memory_cap_bytes=None):
    """Gram matrix, loaded from / stored to ``cache_dir`` when one is given."""
    kwargs = {"threads": threads}
    if memory_cap_bytes:
        kwargs["memory_cap_bytes"] = memory_cap_bytes
    if cache_dir is None:
        return featmap.gram_matrix(spec, rows, cols, **kwargs).values
    path = Path(cache_dir) / f"gram_{_gram_key(spec, rows, cols)}.npy"
    if path.exists():
        log.info("gram cache hit %s", path.name)
        return np.load(path)
    values = featmap.gram_matrix(spec, rows, cols, **kwargs).values
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp.npy")
    np.save(tmp, values)
    tmp.replace(path)
    return values


def prepare_tabular(run: _Run):
    t = run.cfg.tabular
    seed = run.cfg.seed
    with run.stage("load_csv"):
        full = data.load_csv(t.csv_path, t.label_column)
    run.manifest.datasets["csv"] = {
        "path": str(t.csv_path), "rows": len(full), "features": full.X.shape[1],
        "class_counts": list(full.class_counts()), "sha256": full.fingerprint(),
    }
    with run.stage("sample_train"):
        train, rest = data.balanced_sample(full, t.train_per_class, seed)
    with run.stage("sample_test"):
        test, _ = data.balanced_sample(rest, t.test_per_class, seed + 1)
    run.manifest.seeds.update({"train_sample": seed, "test_sample": seed + 1, "smo": seed})
    with run.stage("scale"):
        scaler = data.fit_scaler(train)
        train = data.apply_scaler(scaler, train)
        test = data.apply_scaler(scaler, test)
    run.manifest.datasets["train"] = {"rows": len(train), "class_counts": list(train.class_counts())}
    run.manifest.datasets["test"] = {"rows": len(test), "class_counts": list(test.class_counts())}
    return train, test


def _tabular_kernels(run: _Run, train, test):
    """Train/test kernel inputs for SMO: (X_or_gram, kernel spec, test input)."""
    t = run.cfg.tabular
    if t.kernel != "quantum":
        spec = svm.KernelSpec(t.kernel.upper(), t.gamma, t.degree, t.coef0)
        return train.X, spec, test.X, None
    fspec = feature_map_spec(run.cfg, train.X.shape[1])
    cap = t.memory_cap_mb << 20
    q_train = quantum_inputs(run.cfg, train.X)
    q_test = quantum_inputs(run.cfg, test.X)
    with run.stage("gram_train"):
        g_train = cached_gram(fspec, q_train, None, t.gram_cache_dir, run.cfg.threads, cap)
    with run.stage("gram_test"):
        g_test = cached_gram(fspec, q_test, q_train, t.gram_cache_dir, run.cfg.threads, cap)
    run.manifest.config["resolved_feature_map"] = fspec.as_dict()
    return g_train, svm.KernelSpec(svm.PRECOMPUTED), g_test, fspec


def run_tabular(cfg: ExperimentConfig):
    """Balanced sample -> scale -> SVM (classical or quantum kernel) -> report.

    Returns ``(report, confusion, manifest)`` and writes ``report.txt``,
    ``metrics.json``, ``confusion.csv``, ``model.json``, ``manifest.json``
    (and ``gram.csv`` when ``export_gram`` is set) into ``cfg.output_dir``.
    """
    if cfg.experiment != TABULAR:
        raise ValueError("run_tabular needs a tabular config")
    run = _Run(cfg)
    t = cfg.tabular
    with run.recording():
        train, test = prepare_tabular(run)
        X_fit, kspec, X_eval, fspec = _tabular_kernels(run, train, test)
        with run.stage("train_smo"):
            model = svm.train_smo(X_fit, svm.to_signed(train.y), kspec, t.C, t.tol,
                                  t.max_passes, cfg.seed, t.max_sweeps)
        run.manifest.config["resolved_kernel"] = model.kernel.as_dict()
        run.manifest.datasets["svm"] = {
            "support_vectors": int(model.support.size), "sweeps": model.sweeps,
            "converged": model.converged,
        }
        with run.stage("predict"):
            y_pred = svm.from_signed(svm.predict(model, X_eval))
        with run.stage("report"):
            cm = metrics.confusion(test.y, y_pred)
            rep = metrics.report(cm, tuple(t.class_names))
            rep.save(run.out)
            run.manifest.artifacts += ["report.txt", "metrics.json", "confusion.csv"]
            svm.save_model(model, run.artifact("model.json"))
            if t.export_gram and fspec is not None:
                featmap.GramMatrix(X_fit, fspec, symmetric=True).to_csv(run.artifact("gram.csv"))
        log.info("accuracy %.4f", rep.accuracy)
    return rep, cm, run.manifest


def run_gram(cfg: ExperimentConfig):
    """Sample and scale like :func:`run_tabular`, then export the quantum Gram matrices."""
    run = _Run(cfg)
    with run.recording():
        train, test = prepare_tabular(run)
        fspec = feature_map_spec(cfg, train.X.shape[1])
        t = cfg.tabular
        cap = t.memory_cap_mb << 20
        q_train = quantum_inputs(cfg, train.X)
        q_test = quantum_inputs(cfg, test.X)
        with run.stage("gram_train"):
            g_train = cached_gram(fspec, q_train, None, t.gram_cache_dir, cfg.threads, cap)
        with run.stage("gram_test"):
            g_test = cached_gram(fspec, q_test, q_train, t.gram_cache_dir, cfg.threads, cap)
        run.manifest.config["resolved_feature_map"] = fspec.as_dict()
        featmap.GramMatrix(g_train, fspec, True).to_csv(run.artifact("gram_train.csv"))
        featmap.GramMatrix(g_test, fspec).to_csv(run.artifact("gram_test.csv"))
    return g_train, g_test, run.manifest


# --------------------------------------------------------------------------
# image
# --------------------------------------------------------------------------


def _quanv_features(images: np.ndarray, qspec: quanv.QuanvSpec, cache_dir, threads) -> np.ndarray:
    qv = quanv.Quanvolver(qspec)
    if cache_dir is None:
        return np.stack([qv(img, threads) for img in images])
    cache = quanv.TensorCache(cache_dir)
    return np.stack([cache.get_or_compute(img, qv, threads) for img in images])


def _summary(logs: dict[str, nn.TrainLog]) -> str:
    names = list(logs)
    head = f"{'metric':<12}" + "".join(f"{n:>12}" for n in names)
    lines = [f"final epoch: {len(logs[names[0]])}", head]
    for attr in ("train_loss", "train_acc", "test_loss", "test_acc"):
        row = f"{attr:<12}" + "".join(f"{getattr(logs[n][-1], attr):>12.6f}" for n in names)
        lines.append(row)
    return "\n".join(lines) + "\n"


def run_image(cfg: ExperimentConfig, datasets=None):
    """Train the dense softmax net on raw pixels and/or quanvolved features.

    ``datasets`` may supply ``(train, test)`` ImageDatasets directly instead of
    reading ``cfg.image.root``.  Returns ``(logs, manifest)`` where ``logs``
    maps arm name (``baseline``/``hybrid``) to its :class:`~qmlhealth.nn.TrainLog`.
    """
    if cfg.experiment != IMAGE:
        raise ValueError("run_image needs an image config")
    run = _Run(cfg)
    im = cfg.image
    arms = ["baseline", "hybrid"] if im.compare else (["hybrid"] if im.use_quanv else ["baseline"])
    logs: dict[str, nn.TrainLog] = {}
    with run.recording():
        with run.stage("load_images"):
            if datasets is None:
                train, test = data.load_images(im.root, im.resolution, im.train_cap,
                                               im.test_cap, cfg.seed)
            else:
                train, test = datasets
            if len(train) == 0 or len(test) == 0:
                raise DataError("image splits must both be non-empty")
        run.manifest.datasets.update({
            "classes": list(train.class_names),
            "train": {"images": len(train), "sha256": train.fingerprint()},
            "test": {"images": len(test), "sha256": test.fingerprint()},
        })
        run.manifest.seeds.update({"image_cap": cfg.seed, "nn_init": cfg.seed,
                                   "nn_shuffle": cfg.seed, "quanv_circuit": im.quanv.seed})
        qspec = quanv.QuanvSpec(depth=im.quanv.depth, seed=im.quanv.seed, stride=im.quanv.stride)
        for arm in arms:
            with run.stage(f"features_{arm}"):
                if arm == "hybrid":
                    Xtr = _quanv_features(train.images, qspec, im.cache_dir, cfg.threads)
                    Xte = _quanv_features(test.images, qspec, im.cache_dir, cfg.threads)
                else:
                    Xtr, Xte = train.images, test.images
                Xtr = Xtr.reshape(len(train), -1)
                Xte = Xte.reshape(len(test), -1)
            with run.stage(f"train_{arm}"):
                sizes = [Xtr.shape[1], *im.hidden, im.output_width]
                net0 = nn.init_dense_net(sizes, cfg.seed)
                net, tlog = nn.train_sgd(net0, (Xtr, train.labels), (Xte, test.labels),
                                         im.lr, im.epochs, im.batch_size, cfg.seed)
            logs[arm] = tlog
            tlog.to_csv(run.artifact(f"epochs_{arm}.csv"))
            # report over the two real classes even when output_width > 2
            y_pred = nn.forward(net, Xte)[:, :2].argmax(axis=1)
            rep = metrics.report(metrics.confusion(test.labels, y_pred), train.class_names)
            rep.save(run.out, stem=f"{arm}_")
            run.manifest.artifacts += [f"{arm}_report.txt", f"{arm}_metrics.json",
                                       f"{arm}_confusion.csv"]
        run.artifact("summary.txt").write_text(_summary(logs), encoding="utf-8")
    return logs, run.manifest
