"""``geneo-lab`` command line."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import dsl as D
from . import geo as G
from .data import DATA_ENV

log = logging.getLogger("geneo_lab")


# --------------------------------------------------------------------------- helpers

def _load_cfg(args):
    from .experiments import PRESETS, load_config
    if args.config in PRESETS:
        cfg = PRESETS[args.config]()
    else:
        cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.model_seed = args.seed
    if getattr(args, "split_seed", None) is not None:
        cfg.split_seed = args.split_seed
    if getattr(args, "threads", None):
        cfg.threads = args.threads
    if getattr(args, "data", None):
        cfg.data_dir = args.data
    if getattr(args, "blackbox", None):
        cfg.blackbox.path = args.blackbox
        if args.blackbox.endswith(".csv"):
            cfg.blackbox.kind = "table"
    return cfg


def _emit(obj, fmt: str, text: str):
    if fmt == "json":
        print(json.dumps(obj, indent=1))
    else:
        print(text)


def _print_rows(rows):
    print(f"{'model':<16}{'C1':>8}{'C2':>8}{'acc':>9}{'fid':>9}")
    for r in rows:
        fid = "" if r.fidelity is None else f"{100 * r.fidelity:.1f}%"
        print(f"{r.model_id:<16}{r.c1:>8}{r.c2:>8}{100 * r.accuracy:>8.1f}%{fid:>9}")


# --------------------------------------------------------------------------- commands

def cmd_run(args) -> int:
    from .experiments import cmd_run as run
    cfg = _load_cfg(args)
    res = run(cfg, args.out)
    _print_rows(res.rows)
    if res.blackbox.test_accuracy is not None:
        print(f"black box ({res.blackbox.name}) test accuracy {100 * res.blackbox.test_accuracy:.2f}%")
    print(f"wrote {res.out}")
    return 0 if len(res.rows) == len(cfg.models) else 1


def cmd_rescaled(args) -> int:
    from .experiments import cmd_rescaled as run
    cfg = _load_cfg(args)
    res = run(cfg, args.out)
    _print_rows(res.rows)
    print(f"wrote {res.out}")
    return 0 if len(res.rows) == len(cfg.rescaled_models) else 1


def cmd_verify(args) -> int:
    from .randomized import DEFAULT_INSTANCES, SUITES, run_suite
    names = list(SUITES) if args.suite == "all" else [args.suite]
    if names[0] not in SUITES:
        print(f"error: unknown suite {args.suite!r}; choose from all, {', '.join(SUITES)}", file=sys.stderr)
        return 2
    data = None
    if any(n in ("gradient-check", "invariance") for n in names) and not args.synthetic:
        from .data import load_mnist_dir, mnist_available, stratified_split
        if mnist_available(args.data):
            ds = load_mnist_dir(args.data)
            test = stratified_split(ds.labels, 0).test
            data = (ds.raw[test], ds.labels[test])
        else:
            log.warning("MNIST not found; using synthetic images")
    failed = False
    for name in names:
        kw = {}
        if name in ("gradient-check", "invariance"):
            kw["data"] = data
        if name == "hemi-metric" and args.inject_expansive:
            kw["inject_expansive"] = True
        res = run_suite(name, args.instances or DEFAULT_INSTANCES[name], args.seed, **kw)
        print(res.summary())
        for f in res.failures:
            print("  counterexample:", f.replace("\n", "\n    "))
        failed |= not res.passed
    return 1 if failed else 0


def _instance_distance(doc: dict):
    from .observer import EvaluationSet, observer_from_json
    from .perception import space_from_json
    spaces = {}
    for s in doc.get("spaces", []):
        sp = space_from_json(s)
        spaces[sp.id] = sp
    geos = {name: G.geo_from_json(g, spaces) for name, g in doc["geos"].items()}
    obs = observer_from_json(doc["observer"], spaces)
    alpha, beta = geos[doc["alpha"]], geos[doc["beta"]]
    ev = doc.get("evaluation", {})
    data = ev.get("data", list(range(alpha.dom.size)))
    return obs, alpha, beta, EvaluationSet(np.asarray(data), ev.get("metric"))


def _predictions(path: Path, prep, idx):
    from .experiments import read_prediction_table
    from .persistence import load_model
    if path.suffix == ".csv":
        table = read_prediction_table(path)
        return np.array([table[int(i)] for i in idx], dtype=np.int64)
    model = load_model(path)
    images = prep.data.raw[idx]
    shape = getattr(model, "image_shape", None)
    if shape is None and model.kind == "mlp":
        side = int(round(np.sqrt(model.sizes[0])))
        shape = (side, side)
    if shape is not None and tuple(shape) != images.shape[1:]:
        from .data import downscale_2x2_max
        images = downscale_2x2_max(images)
    return model.predict_images(images)


def cmd_distance(args) -> int:
    from .observer import EvaluationSet, surrogate_distance
    if args.instance:
        obs, alpha, beta, ev = _instance_distance(json.loads(Path(args.instance).read_text()))
        res = surrogate_distance(obs, alpha, beta, ev)
    else:
        if not (args.alpha and args.beta):
            print("distance needs --instance or both --alpha and --beta", file=sys.stderr)
            return 2
        from .experiments import index_geo, prepare_data
        from .perception import finite_space
        cfg = _load_cfg(args)
        prep = prepare_data(cfg)
        idx = prep.work.test[: args.limit] if args.limit else prep.work.test
        pa, pb = _predictions(Path(args.alpha), prep, idx), _predictions(Path(args.beta), prep, idx)
        from .observer import TranslationCategory
        space, labels10 = finite_space(f"points{len(idx)}", len(idx)), finite_space("labels10", 10)
        cat = TranslationCategory.identities([space, labels10])
        res = surrogate_distance(cat, index_geo(space, labels10, pa, "alpha"),
                                 index_geo(space, labels10, pb, "beta"),
                                 EvaluationSet(np.arange(len(idx)), "discrete"))
    obj = {"h": res.value, "pair": res.pair.id if res.pair else None,
           "costs": [{"pair": p, "cost": c} for p, c in res.costs]}
    if args.format == "csv":
        print(res.csv(), end="")
    else:
        _emit(obj, args.format, f"h = {res.value!r} via {obj['pair']}")
    return 0


def cmd_complexity(args) -> int:
    if args.builtin:
        src, assignments, name = D.builtin_model(args.builtin)
    else:
        src, assignments, name = Path(args.diagram).read_text(), {}, args.name
    try:
        prog = D.parse(src)
        name = name or next(reversed(prog.diagrams))
        d = D.typecheck(prog.diagrams[name], prog.signature)
        if args.assignment and Path(args.assignment).exists():
            assign = json.loads(Path(args.assignment).read_text())
        elif args.assignment:
            if args.assignment not in assignments:
                print(f"unknown assignment {args.assignment!r}; builtins offer {sorted(assignments)}",
                      file=sys.stderr)
                return 2
            assign = assignments[args.assignment]
        else:
            assign = None
        value = D.complexity(d, assign, prog.signature)
    except D.DslError as exc:
        print(f"{args.diagram or args.builtin}:{exc.line}:{exc.col}: {exc.message}", file=sys.stderr)
        return 1
    _emit({"diagram": name, "type": str(d), "complexity": value}, args.format,
          f"{name} : {d}  complexity {value:g}")
    return 0


def cmd_check_diagram(args) -> int:
    text = Path(args.file).read_text()
    try:
        prog = D.parse(text)
        out = {}
        for name, node in prog.diagrams.items():
            out[name] = str(D.typecheck(node, prog.signature))
    except D.DslError as exc:
        print(f"{args.file}:{exc.line}:{exc.col}: {type(exc).__name__}: {exc.message}", file=sys.stderr)
        return 1
    _emit({"ok": True, "diagrams": out}, args.format,
          "\n".join(f"{k} : {v}" for k, v in out.items()) or "no diagrams")
    return 0


def cmd_sample_patterns(args) -> int:
    from .experiments import prepare_data
    from .patterns import sample_patterns
    from .persistence import save_bank
    cfg = _load_cfg(args)
    prep = prepare_data(cfg)
    count = args.count or cfg.bank.count
    bank = sample_patterns(prep.data.raw[prep.work.train], count, cfg.bank.width, cfg.bank.height,
                           cfg.bank.seed if args.seed is None else args.seed)
    out = Path(args.out or cfg.out_dir) / "bank.json"
    save_bank(bank, out)
    print(f"wrote {bank.count} patterns of {bank.height}x{bank.width} to {out}")
    return 0


def cmd_train_blackbox(args) -> int:
    from .experiments import prepare_data, train_blackbox, write_prediction_table
    from .persistence import save_model
    cfg = _load_cfg(args)
    cfg.validate()
    if cfg.blackbox.model is None:
        print("config has no black-box model spec", file=sys.stderr)
        return 2
    prep = prepare_data(cfg)
    model, info = train_blackbox(cfg, prep)
    out = Path(args.out or cfg.out_dir)
    path = save_model(model, out / "models" / "blackbox-cnn.json")
    test = prep.work.test
    scores = model.scores_images(prep.data.raw[test])
    preds = scores.argmax(1)
    write_prediction_table(out / "blackbox_predictions.csv", test, preds, scores)
    acc = float(np.mean(preds == prep.data.labels[test]))
    print(f"black box: {model.count_params()} parameters, test accuracy {100 * acc:.2f}% "
          f"({info['epochs']} epochs); wrote {path}")
    return 0


# --------------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geneo-lab", description="GEO surrogates, observers and MNIST experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", default="desk", help="config JSON, or a preset name (desk, full)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--data", default=None, help=f"MNIST directory (default ${DATA_ENV})")

    for name, fn, doc in (("run", cmd_run, "train and score every configured model"),
                          ("rescaled", cmd_rescaled, "retrain on 2x2-max downscaled images")):
        sp = sub.add_parser(name, help=doc)
        common(sp)
        sp.add_argument("--split-seed", type=int, default=None)
        sp.add_argument("--blackbox", default=None, help="persisted CNN manifest or prediction-table CSV")
        sp.set_defaults(fn=fn)

    sp = sub.add_parser("verify", help="randomized property suites")
    sp.add_argument("suite", help="hemi-metric, monotonicity, lower-bound, functor-law, gradient-check, "
                                   "invariance or all")
    sp.add_argument("--instances", type=int, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threads", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--data", default=None)
    sp.add_argument("--synthetic", action="store_true", help="use synthetic images even if MNIST is present")
    sp.add_argument("--inject-expansive", action="store_true", help="add an expansive arrow (must fail)")
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("distance", help="surrogate distance h_O(alpha, beta)")
    common(sp)
    sp.add_argument("--instance", help="JSON with spaces, geos, observer, alpha, beta")
    sp.add_argument("--alpha", help="model manifest or prediction CSV")
    sp.add_argument("--beta", help="model manifest or prediction CSV")
    sp.add_argument("--limit", type=int, default=None)
    sp.add_argument("--split-seed", type=int, default=None)
    sp.add_argument("--format", choices=("json", "csv", "text"), default="json")
    sp.set_defaults(fn=cmd_distance, blackbox=None)

    sp = sub.add_parser("complexity", help="complexity of a diagram under an assignment")
    sp.add_argument("diagram", nargs="?", help="diagram file")
    sp.add_argument("--name", default=None, help="diagram name (default: the last one)")
    sp.add_argument("--builtin", help="geo1:P, geo2:P[:HxW], mlp:784-40-10 or cnn")
    sp.add_argument("--assignment", help="JSON file, or params / nonlinearities for builtins")
    sp.add_argument("--format", choices=("json", "text"), default="json")
    sp.set_defaults(fn=cmd_complexity)

    sp = sub.add_parser("check-diagram", help="parse and typecheck a diagram file")
    sp.add_argument("file")
    sp.add_argument("--format", choices=("json", "text"), default="text")
    sp.set_defaults(fn=cmd_check_diagram)

    sp = sub.add_parser("sample-patterns", help="sample and save a pattern bank")
    common(sp)
    sp.add_argument("--count", type=int, default=None)
    sp.set_defaults(fn=cmd_sample_patterns, blackbox=None)

    sp = sub.add_parser("train-blackbox", help="train and save the CNN black box and its test predictions")
    common(sp)
    sp.set_defaults(fn=cmd_train_blackbox, blackbox=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    if args.command == "complexity" and not (args.diagram or args.builtin):
        print("complexity needs a diagram file or --builtin", file=sys.stderr)
        return 2
    if getattr(args, "threads", None):
        from .patterns import set_threads
        set_threads(args.threads)
    try:
        return args.fn(args)
    except Exception as exc:
        from .experiments import ConfigError
        if isinstance(exc, (ConfigError, FileNotFoundError, KeyError, ValueError)):
            msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
            print(f"error: {msg}", file=sys.stderr)
            return 2
        raise


if __name__ == "__main__":
    sys.exit(main())
