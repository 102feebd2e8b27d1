"""Command-line entry point: ``qmlhealth {tabular,image,gram,report}``.

Exit codes: 0 success, 2 config error, 3 data error, 4 runtime/numerical error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, metrics, pipeline
from .config import IMAGE, TABULAR, apply_override, validate_dict
from .errors import ConfigError, DataError, QmlHealthError, ValidationError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

log = logging.getLogger("qmlhealth")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", "-c", type=Path, help="JSON experiment config")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config field by dotted path, e.g. tabular.C=2.0 (repeatable)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", "-o", help="output directory")
    p.add_argument("--threads", type=int, help="worker threads for Gram matrices and quanvolution")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmlhealth", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    tab = sub.add_parser("tabular", help="SVM with a classical or quantum kernel on a CSV")
    _add_common(tab)
    tab.add_argument("--csv", help="tabular CSV path")
    tab.add_argument("--label-column")
    tab.add_argument("--kernel", choices=("rbf", "linear", "poly", "quantum"))

    img = sub.add_parser("image", help="dense net on raw pixels vs quanvolved features")
    _add_common(img)
    img.add_argument("--root", help="image tree root containing train/ and test/")
    img.add_argument("--epochs", type=int)
    arm = img.add_mutually_exclusive_group()
    arm.add_argument("--only-baseline", action="store_true", help="single arm without quanvolution")
    arm.add_argument("--only-hybrid", action="store_true", help="single arm with quanvolution")

    gram = sub.add_parser("gram", help="compute and export quantum Gram matrices only")
    _add_common(gram)
    gram.add_argument("--csv", help="tabular CSV path")
    gram.add_argument("--label-column")
    gram.add_argument("--map", dest="map_kind", choices=("angle", "zz"))
    gram.add_argument("--n-qubits", type=int)
    gram.add_argument("--n-layers", type=int)

    rep = sub.add_parser("report", help="re-render a report from a saved confusion.csv")
    rep.add_argument("confusion", type=Path)
    rep.add_argument("--class-names", nargs=2, metavar=("NEG", "POS"))
    rep.add_argument("--out", "-o", type=Path, help="also write report.txt / metrics.json here")
    return parser


def _raw_config(args, kind: str) -> dict:
    raw: dict = {}
    if args.config is not None:
        try:
            raw = json.loads(args.config.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}", field="--config") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON: {exc.msg} at line {exc.lineno}, "
                              f"column {exc.colno}", field=f"line {exc.lineno}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{args.config}: config must be a JSON object", field="<root>")
    raw.setdefault("experiment", kind)
    if raw["experiment"] != kind:
        raise ConfigError(f"config declares experiment {raw['experiment']!r} but the "
                          f"{args.command!r} subcommand was used", field="experiment")
    section = raw.setdefault(kind, {})
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.out is not None:
        raw["output_dir"] = args.out
    if args.threads is not None:
        raw["threads"] = args.threads
    if kind == TABULAR:
        if args.csv is not None:
            section["csv_path"] = args.csv
        if args.label_column is not None:
            section["label_column"] = args.label_column
        if getattr(args, "kernel", None) is not None:
            section["kernel"] = args.kernel
        if getattr(args, "map_kind", None) is not None:
            section.setdefault("feature_map", {})["kind"] = args.map_kind
        if getattr(args, "n_qubits", None) is not None:
            section.setdefault("feature_map", {})["n_qubits"] = args.n_qubits
        if getattr(args, "n_layers", None) is not None:
            section.setdefault("feature_map", {})["n_layers"] = args.n_layers
    else:
        if args.root is not None:
            section["root"] = args.root
        if args.epochs is not None:
            section["epochs"] = args.epochs
        if args.only_baseline or args.only_hybrid:
            section["compare"] = False
            section["use_quanv"] = bool(args.only_hybrid)
    for assignment in args.overrides:
        apply_override(raw, assignment)
    return raw


def _failure_manifest(raw: dict | None, error: Exception) -> None:
    """Best-effort manifest for runs that never got a valid config."""
    out = (raw or {}).get("output_dir")
    if not isinstance(out, str):
        return
    manifest = pipeline.RunManifest(config=raw, status="failed", error=str(error))
    try:
        manifest.write(out)
    except OSError:
        pass


def _run_experiment(args, kind: str) -> int:
    raw = None
    try:
        raw = _raw_config(args, kind)
        cfg = validate_dict(raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        _failure_manifest(raw, exc)
        return EXIT_CONFIG

    try:
        if args.command == "tabular":
            rep, _, manifest = pipeline.run_tabular(cfg)
            print(rep.render(), end="")
        elif args.command == "gram":
            g_train, g_test, manifest = pipeline.run_gram(cfg)
            print(f"gram_train {g_train.shape[0]}x{g_train.shape[1]}, "
                  f"gram_test {g_test.shape[0]}x{g_test.shape[1]}")
        else:
            logs, manifest = pipeline.run_image(cfg)
            print((Path(cfg.output_dir) / "summary.txt").read_text(encoding="utf-8"), end="")
    except pipeline.StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA if exc.is_data_error else EXIT_RUNTIME
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (QmlHealthError, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"artifacts written to {cfg.output_dir} ({manifest.status})")
    return EXIT_OK


def _run_report(args) -> int:
    try:
        cm, names = metrics.ConfusionMatrix.from_csv(args.confusion)
        rep = metrics.report(cm, tuple(args.class_names) if args.class_names else names)
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValidationError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(rep.render(), end="")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        rep.save(args.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    if args.command == "report":
        return _run_report(args)
    kind = TABULAR if args.command in ("tabular", "gram") else IMAGE
    return _run_experiment(args, kind)


if __name__ == "__main__":
    sys.exit(main())
