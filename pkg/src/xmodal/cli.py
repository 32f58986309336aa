"""Command-line entry point: ``xmodal <subcommand> [flags]``.

Every subcommand reads a JSON run config (``--config``) and writes its
artifacts into ``--out``. Each artifact carries a provenance block holding
the resolved config and seed, and reruns with the same inputs are
byte-identical. Exit codes: 0 success, 1 invalid input, 2 runtime failure.
"""

import argparse
import copy
import csv
import io
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .arch import ArchitectureSpec, lstm_spec
from .budget import STRATEGIES, ModalityScores, allocate
from .crossval import compare, crossvalidate, mean_roc
from .data.preprocess import preprocess
from .data.schema import Dataset, read_jsonl, write_jsonl
from .data.splits import normalize
from .data.synthetic import SyntheticConfig, generate_examples
from .dream import DreamConfig, denormalize, dream, export_dream
from .errors import (
    ContractError, EmptyDatasetError, InfeasibleBudgetError, ShapeError, TrainingError, ValidationError,
)
from .features import MODALITIES, SEQ_FEATURES
from .metrics import objective_histogram
from .model import build_model, load_model, save_model
from .rng import Rng
from .svg import line_chart
from .train import TrainConfig, train

log = logging.getLogger("xmodal")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
TABLE_ROWS = (
    ("Accuracy", "accuracy"), ("Precision", "precision"), ("Recall", "recall"),
    ("F1", "f1"), ("MCC", "mcc"), ("ROC AUC", "auc"),
)
HISTOGRAM_EDGES = [float(x) for x in range(0, 22, 2)]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# ---------------------------------------------------------------- config

def load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}", "config") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})", "config") from None
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object", "config")
    cfg["_base_dir"] = os.path.dirname(os.path.abspath(path))
    return cfg


def resolve(cfg, args):
    """Apply flag overrides; a top-level seed propagates to every stage."""
    cfg = copy.deepcopy(cfg)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.out is not None:
        cfg["output_dir"] = args.out
    cfg.setdefault("output_dir", "out")
    if "seed" in cfg:
        seed = int(cfg["seed"])
        if seed < 0 or seed >= 2**64:
            raise ValidationError("seed must be an unsigned 64-bit integer", "seed")
        syn = cfg.get("data", {}).get("synthetic")
        if isinstance(syn, dict):
            syn["seed"] = seed
        for key in ("train", "dream"):
            if isinstance(cfg.get(key), dict) or key == "train":
                cfg.setdefault(key, {})["seed"] = seed
    return cfg


def provenance(command, cfg):
    # the output location does not influence any artifact, so it is left out
    public = {k: v for k, v in cfg.items() if not k.startswith("_") and k != "output_dir"}
    return {"tool": "xmodal", "version": __version__, "command": command, "seed": cfg.get("seed"), "config": public}


def _path(cfg, p):
    return p if os.path.isabs(p) else os.path.join(cfg.get("_base_dir", "."), p)


def _out(cfg, *parts):
    d = cfg["output_dir"]
    os.makedirs(d, exist_ok=True)
    return os.path.join(d, *parts)


# ---------------------------------------------------------------- writers

def write_json(path, obj, prov):
    with open(path, "w") as fh:
        json.dump({"provenance": prov, **obj}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, header, rows, prov):
    buf = io.StringIO()
    buf.write("# provenance: " + json.dumps(prov, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def write_svg(path, svg, prov):
    head, rest = svg.split("\n", 1)
    comment = "<!-- provenance: " + json.dumps(prov, sort_keys=True).replace("--", "- -") + " -->"
    with open(path, "w") as fh:
        fh.write(head + "\n" + comment + "\n" + rest)


# ---------------------------------------------------------------- inputs

def load_dataset(cfg):
    data = cfg.get("data")
    if not isinstance(data, dict):
        raise ValidationError("config needs a 'data' object", "data")
    sources = [k for k in ("synthetic", "jsonl", "raw") if k in data]
    if len(sources) != 1:
        raise ValidationError("data needs exactly one of 'synthetic', 'jsonl' or 'raw'", "data")
    src = sources[0]
    if src == "synthetic":
        syn = dict(data["synthetic"])
        try:
            return Dataset.from_examples(generate_examples(SyntheticConfig(**syn)))
        except TypeError as exc:
            raise ValidationError(f"data.synthetic: {exc}", "data.synthetic") from None
        except ValueError as exc:
            raise ValidationError(f"data.synthetic: {exc}", "data.synthetic") from None
    path = _path(cfg, data[src])
    if not os.path.exists(path):
        raise ValidationError(f"data file not found: {data[src]}", f"data.{src}")
    if src == "jsonl":
        return Dataset.from_examples(read_jsonl(path))
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise ValidationError(f"{data[src]}:{lineno}: invalid JSON ({exc.msg})", "data.raw") from None
    return preprocess(records, int(data.get("window_days", 60)))


def _baseline(cfg, source):
    if source is None:
        return lstm_spec()
    if isinstance(source, dict):
        return ArchitectureSpec.from_dict(source)
    path = _path(cfg, source)
    if not os.path.exists(path):
        raise ValidationError(f"baseline spec not found: {source}", "baseline")
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{source}: invalid JSON ({exc.msg})", "baseline") from None
    d.pop("provenance", None)
    d.pop("accounting", None)
    return ArchitectureSpec.from_dict(d)


def parse_scores(text):
    """``"0.8062,0.8017,0.7418"`` (weight, sleep, steps) to a score dict."""
    parts = text.split(",")
    if len(parts) != len(MODALITIES):
        raise ValidationError(f"--scores needs {len(MODALITIES)} comma-separated values", "scores")
    try:
        return {m: float(p) for m, p in zip(MODALITIES, parts)}
    except ValueError:
        raise ValidationError(f"--scores values must be numbers, got {text!r}", "scores") from None


def allocation_inputs(cfg):
    a = cfg.get("allocate", {})
    scores = a.get("scores")
    if isinstance(scores, str):
        scores = parse_scores(scores)
    if scores is None:
        raise ValidationError("allocation needs scores (--scores or allocate.scores)", "scores")
    if "k" not in a:
        raise ValidationError("allocation needs k (--k or allocate.k)", "k")
    strategy = str(a.get("strategy", "B")).upper()
    if strategy not in STRATEGIES:
        raise ValidationError(f"strategy must be one of {STRATEGIES}", "strategy")
    return _baseline(cfg, a.get("baseline")), ModalityScores(scores, float(a["k"])), strategy, a


def arch_from(cfg, source, field_name):
    """An ArchitectureSpec from an inline spec or from allocator inputs."""
    if not isinstance(source, dict):
        raise ValidationError(f"{field_name} must be an object", field_name)
    if "spec" in source:
        return ArchitectureSpec.from_dict(source["spec"])
    if "allocate" in source:
        sub = {**cfg, "allocate": source["allocate"]}
        baseline, scores, strategy, a = allocation_inputs(sub)
        return allocate(baseline, scores, strategy, a.get("cross_fraction", 0.5)).spec
    if "variant" in source:
        return ArchitectureSpec.from_dict(source)
    raise ValidationError(f"{field_name} needs 'spec' or 'allocate'", field_name)


def architectures(cfg):
    if "archs" in cfg:
        if not isinstance(cfg["archs"], dict) or not cfg["archs"]:
            raise ValidationError("archs must be a non-empty object of name -> arch", "archs")
        return {name: arch_from(cfg, a, f"archs.{name}") for name, a in cfg["archs"].items()}
    if "arch" in cfg:
        return {"model": arch_from(cfg, cfg["arch"], "arch")}
    raise ValidationError("config needs 'arch' or 'archs'", "arch")


def train_config(cfg):
    try:
        return TrainConfig(**cfg.get("train", {}))
    except TypeError as exc:
        raise ValidationError(f"train: {exc}", "train") from None
    except ContractError as exc:
        raise ValidationError(f"train: {exc}", "train") from None


# ---------------------------------------------------------------- commands

def cmd_generate(cfg):
    data = cfg.get("data", {})
    prov = provenance("generate", cfg)
    if "synthetic" in data:
        try:
            examples = generate_examples(SyntheticConfig(**data["synthetic"]))
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"data.synthetic: {exc}", "data.synthetic") from None
        write_jsonl(examples, _out(cfg, "dataset.jsonl"), prov)
        log.info("wrote %d examples", len(examples))
        return
    ds = load_dataset(cfg)
    write_jsonl(ds.examples, _out(cfg, "dataset.jsonl"), prov)
    write_json(_out(cfg, "rejections.json"), {"rejections": [list(r) for r in ds.rejections]}, prov)
    log.info("wrote %d examples, %d rejected", len(ds), len(ds.rejections))


def cmd_allocate(cfg):
    baseline, scores, strategy, a = allocation_inputs(cfg)
    res = allocate(baseline, scores, strategy, a.get("cross_fraction", 0.5), a.get("tolerance", 0.02))
    if not res.within_tolerance:
        log.warning("allocation missed the tolerance: %d vs budget %d", res.achieved_params, res.budget)
    write_json(_out(cfg, "allocation.json"), res.to_dict(), provenance("allocate", cfg))


def cmd_train(cfg):
    # a shared config may list several archs for crossval; train uses 'arch'
    archs = {"model": arch_from(cfg, cfg["arch"], "arch")} if "arch" in cfg else architectures(cfg)
    if len(archs) != 1:
        raise ValidationError("train takes a single 'arch'", "arch")
    spec = next(iter(archs.values()))
    tcfg = train_config(cfg)
    ds = load_dataset(cfg)
    norm, stats = normalize(ds, range(len(ds)))
    model = build_model(spec, Rng(tcfg.seed).child("init"), tcfg.dropout_p)
    model, history = train(model, norm, tcfg)
    model.stats = stats.to_dict()
    prov = provenance("train", cfg)
    save_model(model, _out(cfg, "model.json"), prov)
    write_csv(_out(cfg, "history.csv"), ["epoch", "loss"], [(e + 1, v) for e, v in enumerate(history)], prov)


def _table(results, pvalues):
    header = ["Metric", *results]
    rows = [[label, *(repr(results[n].aggregate["pooled"][key]) for n in results)] for label, key in TABLE_ROWS]
    rows.append(["p-value", *("" if pvalues.get(n) is None else repr(pvalues[n]) for n in results)])
    return header, rows


def _markdown(header, rows, prov):
    out = ["<!-- provenance: " + json.dumps(prov, sort_keys=True).replace("--", "- -") + " -->", ""]
    out.append("| " + " | ".join(header) + " |")
    out.append("|" + "---|" * len(header))
    for r in rows:
        cells = [r[0]] + [c if c == "" else f"{100 * float(c):.2f}" if r[0] != "p-value" else f"{float(c):.4g}" for c in r[1:]]
        out.append("| " + " | ".join(cells) + " |")
    return "\n".join(out) + "\n"


def _comparisons(cfg, names):
    pairs = cfg.get("eval", {}).get("comparisons")
    if pairs is None:
        pairs = [[n, names[0]] for n in names[1:]]
    for p in pairs:
        if len(p) != 2 or any(x not in names for x in p):
            raise ValidationError(f"comparison {p} must name two configured archs", "eval.comparisons")
    return pairs


def cmd_crossval(cfg, workers):
    archs = architectures(cfg)
    tcfg = train_config(cfg)
    k = int(cfg.get("eval", {}).get("k_folds", 10))
    ds = load_dataset(cfg)
    prov = provenance("crossval", cfg)
    results = {}
    for name, spec in archs.items():
        res = crossvalidate(spec, ds, k, tcfg, name=name, workers=workers)
        results[name] = res
        write_json(_out(cfg, f"folds_{name}.json"), res.to_dict(), prov)
        for r in res.reports:
            write_csv(_out(cfg, f"roc_{name}_fold{r.fold_index}.csv"), ["fpr", "tpr"], r.roc_points, prov)
        grid, tpr = mean_roc(res.reports)
        write_csv(_out(cfg, f"roc_{name}_mean.csv"), ["fpr", "tpr"], zip(grid, tpr), prov)
        hist = objective_histogram(res.scores, res.labels, np.abs(ds.objectives_kg), HISTOGRAM_EDGES,
                                   res.aggregate["pooled"]["threshold_star"])
        write_csv(_out(cfg, f"histogram_{name}.csv"), ["bin_lo", "bin_hi", "correct", "wrong_succ", "wrong_fail"],
                  [(h["bin_lo"], h["bin_hi"], h["correct"], h["wrong_successful"], h["wrong_failed"]) for h in hist], prov)
    names = list(results)
    series = [(n, *mean_roc(results[n].reports)) for n in names]
    write_svg(_out(cfg, "roc.svg"), line_chart(series, "Mean ROC", "false positive rate", "true positive rate",
                                               xlim=(0, 1), ylim=(0, 1)), prov)
    tests, pvalues = [], {}
    for a, b in _comparisons(cfg, names):
        t = compare(results[a], results[b])
        tests.append({"a": a, "b": b, "metric": "auc", **t})
        pvalues.setdefault(a, t["p"])
    write_json(_out(cfg, "ttests.json"), {"tests": tests}, prov)
    summary = {
        n: {"aggregate": r.aggregate, "fold_auc": r.fold_values("auc"), "p_value": pvalues.get(n)}
        for n, r in results.items()
    }
    write_json(_out(cfg, "summary.json"), {"models": summary}, prov)
    header, rows = _table(results, pvalues)
    write_csv(_out(cfg, "metrics.csv"), header, rows, prov)
    with open(_out(cfg, "metrics.md"), "w") as fh:
        fh.write(_markdown(header, rows, prov))


def cmd_dream(cfg):
    if "model" not in cfg:
        raise ValidationError("dream needs a 'model' checkpoint path", "model")
    path = _path(cfg, cfg["model"])
    if not os.path.exists(path):
        raise ValidationError(f"model checkpoint not found: {cfg['model']}", "model")
    try:
        model = load_model(path)
    except (json.JSONDecodeError, KeyError) as exc:
        raise ValidationError(f"{cfg['model']}: unreadable checkpoint ({exc})", "model") from None
    dcfg = dict(cfg.get("dream", {}))
    targets = dcfg.pop("targets", [dcfg.get("target", "success")])
    prov = provenance("dream", cfg)
    curves = []
    for target in targets:
        try:
            dc = DreamConfig(**{**dcfg, "target": target})
        except TypeError as exc:
            raise ValidationError(f"dream: {exc}", "dream") from None
        res = dream(model, dc)
        text = export_dream(res, model.stats)
        with open(_out(cfg, f"dream_{target}.csv"), "w") as fh:
            fh.write("# provenance: " + json.dumps(prov, sort_keys=True) + "\n" + text)
        meta = res.to_dict()
        meta["config"] = dc.to_dict()
        write_json(_out(cfg, f"dream_{target}_trace.json"), meta, prov)
        w = denormalize(res, model.stats)[:, SEQ_FEATURES.index("weight_kg")]
        curves.append((f"{target} weight (kg)", list(range(len(w))), w.tolist()))
    write_svg(_out(cfg, "dream_weight.svg"), line_chart(curves, "Dreamed weight", "day", "kg"), prov)


def cmd_report(cfg):
    inputs = cfg.get("report", {}).get("inputs")
    if not inputs:
        raise ValidationError("report needs report.inputs (crossval output directories)", "report.inputs")
    models, order = {}, []
    for d in inputs:
        path = os.path.join(_path(cfg, d), "summary.json")
        if not os.path.exists(path):
            raise ValidationError(f"no crossval summary in {d}", "report.inputs")
        with open(path) as fh:
            for name, m in json.load(fh)["models"].items():
                if name not in models:
                    order.append(name)
                models[name] = m
    ref = cfg.get("report", {}).get("reference", order[0])
    if ref not in models:
        raise ValidationError(f"reference {ref!r} not among the reported models", "report.reference")
    from .stats import paired_t_test

    header = ["Metric", *order]
    rows = [[label, *(repr(models[n]["aggregate"]["pooled"][key]) for n in order)] for label, key in TABLE_ROWS]
    pv = []
    for n in order:
        if n == ref or len(models[n]["fold_auc"]) != len(models[ref]["fold_auc"]):
            pv.append("")
        else:
            pv.append(repr(paired_t_test(models[n]["fold_auc"], models[ref]["fold_auc"])["p"]))
    rows.append(["p-value", *pv])
    prov = provenance("report", cfg)
    write_csv(_out(cfg, "report.csv"), header, rows, prov)
    with open(_out(cfg, "report.md"), "w") as fh:
        fh.write(_markdown(header, rows, prov))


# ---------------------------------------------------------------- main

def build_parser():
    p = _Parser(prog="xmodal", description="Multimodal LSTM laboratory.")
    sub = p.add_subparsers(dest="command", metavar="{generate,allocate,train,crossval,dream,report}")
    for name in ("generate", "allocate", "train", "crossval", "dream", "report"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run config")
        sp.add_argument("--seed", type=int, help="overrides the config seed")
        sp.add_argument("--out", help="output directory")
        if name == "crossval":
            sp.add_argument("--workers", type=int, default=os.cpu_count() or 1)
        if name == "allocate":
            sp.add_argument("--strategy", choices=STRATEGIES)
            sp.add_argument("--k", type=float)
            sp.add_argument("--scores", help="weight,sleep,steps scores")
            sp.add_argument("--baseline", help="baseline spec JSON")
    return p


def _configure_logging():
    level = os.environ.get("XMODAL_LOG", "error").lower()
    if level not in LOG_LEVELS:
        raise UsageError(f"XMODAL_LOG must be one of {sorted(LOG_LEVELS)}, got {level!r}")
    logging.basicConfig(level=LOG_LEVELS[level], format="%(levelname)s %(name)s: %(message)s", force=True)


def run_command(argv):
    """Run one subcommand; returns the process exit code."""
    try:
        _configure_logging()
        parser = build_parser()
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage() + "xmodal: error: a subcommand is required")
        cfg = load_config(args.config)
        if args.command == "allocate":
            a = cfg.setdefault("allocate", {})
            for key in ("strategy", "k", "scores", "baseline"):
                if getattr(args, key) is not None:
                    a[key] = getattr(args, key)
            if args.baseline is not None:
                # inline the spec so the provenance does not depend on a path
                a["baseline"] = _baseline({}, os.path.abspath(args.baseline)).to_dict()
        cfg = resolve(cfg, args)
        if args.command == "crossval":
            if args.workers < 1:
                raise ValidationError("--workers must be >= 1", "workers")
            cmd_crossval(cfg, args.workers)
        else:
            {"generate": cmd_generate, "allocate": cmd_allocate, "train": cmd_train,
             "dream": cmd_dream, "report": cmd_report}[args.command](cfg)
        return EXIT_OK
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    except (ValidationError, ContractError, ShapeError, EmptyDatasetError, InfeasibleBudgetError) as exc:
        where = f" [{exc.field}]" if getattr(exc, "field", None) else ""
        print(f"xmodal: invalid input{where}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (TrainingError, OSError, ArithmeticError) as exc:
        print(f"xmodal: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to the runtime exit code
        print(f"xmodal: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main():
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
