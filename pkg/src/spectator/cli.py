"""
Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 missing or
incompatible artifact.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import pipeline, store
from .config import ConfigError, ExperimentConfig, from_manifest, load
from .harness import ConfusionMatrix, summarize
from .simulator import default_basis
from .store import ArtifactError

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_ARTIFACT = 0, 2, 3, 4


def _add_common(p: argparse.ArgumentParser, config: bool = True) -> None:
    if config:
        p.add_argument("--config", help="TOML config file (defaults: full-scale values)")
        p.add_argument("--desk-scale", action="store_true", help="apply the small desk-scale preset")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--force", action="store_true", help="accept inputs with differing config hashes")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spectator", description=__doc__.splitlines()[1])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("characterize", help="simulate a characterization dataset for one profile")
    p.add_argument("--profile", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)

    p = sub.add_parser("train-graybox", help="fit a graybox model to a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)

    p = sub.add_parser("optimize-pulse", help="search for the most discriminating pulse")
    p.add_argument("--models", nargs="+", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)

    p = sub.add_parser("train-classifier", help="train the dithered profile classifier")
    p.add_argument("--models", nargs="+", required=True)
    p.add_argument("--pulse", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)

    p = sub.add_parser("run-test", help="simulate the detection phase and write a confusion CSV")
    p.add_argument("--pulse", required=True)
    p.add_argument("--clf", required=True)
    p.add_argument("--profiles", nargs="+", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)

    p = sub.add_parser("report", help="render MSE curves, confusion heatmaps and a summary table")
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--block", nargs="+", help="labels whose mutual confusion is reported separately")

    p = sub.add_parser("run-scenario", help="all stages for one scenario, with cached models")
    p.add_argument("--scenario", required=True)
    p.add_argument("--workdir", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    return ap


def _meta(cfg: ExperimentConfig, args, extra=None) -> dict:
    meta = {"config_hash": cfg.hash(), "config": cfg.to_dict(), "seed": args.seed,
            "command": args.command}
    meta.update(extra or {})
    return meta


def _resolve_config(args, manifests) -> ExperimentConfig:
    """Config from ``--config``/``--desk-scale``, else from the first input manifest."""
    if args.config or args.desk_scale or not manifests:
        cfg = load(args.config, args.desk_scale)
    else:
        if "config" not in manifests[0]:
            raise ArtifactError("input manifest field 'config' missing")
        cfg = from_manifest(manifests[0]["config"])
    if not args.force:
        for m in manifests:
            if m.get("config_hash") != cfg.hash():
                raise ArtifactError(f"manifest field 'config_hash' is {m.get('config_hash')!r} but the "
                                    f"active config hashes to {cfg.hash()!r} (use --force to override)")
    return cfg


def _load_models(paths):
    out = [store.load_graybox(p) for p in paths]
    return [o[0] for o in out], [o[2] for o in out]


def cmd_characterize(args) -> int:
    cfg = load(args.config, args.desk_scale)
    cfg.profiles.spec(args.profile)
    ds = pipeline.characterize(cfg, args.profile, args.seed)
    store.save_dataset(args.out, ds, default_basis(), _meta(cfg, args))
    print(f"wrote {len(ds)} examples for {args.profile} to {args.out}")
    return EXIT_OK


def cmd_train_graybox(args) -> int:
    ds, basis, m = store.load_dataset(args.dataset)
    cfg = _resolve_config(args, [m])
    model, history = pipeline.train_graybox(cfg, ds, args.seed, basis)
    store.save_graybox(args.out, model, history, _meta(cfg, args, {"dataset": str(args.dataset)}))
    print(f"{ds.profile}: train MSE {history['train'][-1]:.3e}, test MSE {history['test'][-1]:.3e}")
    return EXIT_OK


def _check_models(models, manifests):
    ref = models[0]
    for model, m in zip(models[1:], manifests[1:]):
        for key in ("M", "T", "omega"):
            if not np.isclose(getattr(model, key), getattr(ref, key)):
                raise ArtifactError(f"model {model.profile}: manifest field '{key}' differs "
                                    f"({m[key]} vs {getattr(ref, key)})")


def cmd_optimize_pulse(args) -> int:
    models, manifests = _load_models(args.models)
    cfg = _resolve_config(args, manifests)
    _check_models(models, manifests)
    res = pipeline.optimize_pulse(cfg, models, args.scenario, args.seed)
    store.save_pulse(args.out, res.pulse,
                     _meta(cfg, args, {"scenario": str(args.scenario), "objective": res.objective,
                                       "profiles": [m.profile for m in models]}),
                     history=res.history)
    print(f"objective {res.objective:.6f}; amplitudes {np.round(res.pulse.amplitudes, 4).tolist()}")
    return EXIT_OK


def cmd_train_classifier(args) -> int:
    models, manifests = _load_models(args.models)
    pulse, pm = store.load_pulse(args.pulse)
    cfg = _resolve_config(args, manifests + [pm])
    _check_models(models, manifests)
    if pulse.M != models[0].M:
        raise ArtifactError(f"pulse manifest field 'M' is {pulse.M}, models use {models[0].M}")
    clf, history = pipeline.train_classifier(cfg, models, pulse, args.seed)
    store.save_classifier(args.out, clf, history, _meta(cfg, args))
    print(f"held-out accuracy {history['test_accuracy']:.4f}")
    return EXIT_OK


def cmd_run_test(args) -> int:
    pulse, pm = store.load_pulse(args.pulse)
    clf, cm_ = store.load_classifier(args.clf)
    cfg = _resolve_config(args, [pm, cm_])
    if len(args.profiles) != len(clf.labels):
        raise ArtifactError(f"classifier manifest field 'labels' has {len(clf.labels)} classes, "
                            f"{len(args.profiles)} profiles given")
    if list(args.profiles) != list(clf.labels) and not args.force:
        raise ArtifactError(f"classifier manifest field 'labels' is {clf.labels}, got {args.profiles}")
    if pulse.M != cfg.simulation.M:
        raise ArtifactError(f"pulse manifest field 'M' is {pulse.M}, config uses {cfg.simulation.M}")
    cm = pipeline.run_test(cfg, args.profiles, pulse, clf, args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    cm.save_csv(args.out)
    print(f"mean diagonal {summarize(cm)['mean_diagonal']:.2f}%")
    return EXIT_OK


def cmd_report(args) -> int:
    from . import report
    paths = report.render(args.inputs, args.out, block=args.block)
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_run_scenario(args) -> int:
    cfg = load(args.config, args.desk_scale)
    res = pipeline.run_scenario(cfg, args.scenario, args.seed, args.workdir)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    res.confusion.save_csv(args.out)
    print(f"mean diagonal {summarize(res.confusion)['mean_diagonal']:.2f}%")
    return EXIT_OK


COMMANDS = {
    "characterize": cmd_characterize,
    "train-graybox": cmd_train_graybox,
    "optimize-pulse": cmd_optimize_pulse,
    "train-classifier": cmd_train_classifier,
    "run-test": cmd_run_test,
    "report": cmd_report,
    "run-scenario": cmd_run_scenario,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ArtifactError as exc:
        print(f"artifact error: {exc}", file=sys.stderr)
        return EXIT_ARTIFACT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
