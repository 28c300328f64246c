"""Command-line entry point: ``mopadgan <command> [--config c.json] [--seed N] [--out DIR]``.

Exit codes: 0 success, 1 validation failure (bad config, bad arguments,
refused overwrite, failed check), 2 runtime failure.  Failures print one
JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import datasynth as ds
from . import experiment as ex
from . import gan
from . import neuralnet as nn
from . import quality as ql
from . import verify
from .config import ExperimentConfig, load_config
from .errors import ConfigError, PadganError

log = logging.getLogger("mopadgan")

COMMANDS = ("gen-data", "train-surrogate", "train", "evaluate", "sample", "gradcheck", "oracle", "compare")


class ValidationFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationFailure(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mopadgan", description="Performance-augmented diverse GAN experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_, *, data=False, checkpoint=False, surrogate=False, count=False):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", help="experiment config JSON (defaults apply when omitted)")
        s.add_argument("--seed", type=int, help="override the top-level seed")
        s.add_argument("--out", help="output directory (default: output_dir from the config)")
        s.add_argument("--force", action="store_true", help="overwrite existing outputs")
        s.add_argument("-v", "--verbose", action="store_true")
        if data:
            s.add_argument("--data", help="dataset CSV (default: generate from the config)")
        if checkpoint:
            s.add_argument("--checkpoint", help="generator checkpoint JSON")
        if surrogate:
            s.add_argument("--surrogate", help="surrogate checkpoint JSON")
        if count:
            s.add_argument("--count", type=int, default=1000, help="number of designs to draw")
        return s

    add("gen-data", "write the synthetic training dataset")
    add("train-surrogate", "fit the performance surrogate")
    add("train", "train the generator and discriminator", data=True, surrogate=True)
    add("evaluate", "diversity, Pareto, novelty and top-k reports", data=True, checkpoint=True)
    add("sample", "draw designs from a trained generator", checkpoint=True, count=True)
    add("gradcheck", "finite-difference gradient suites")
    add("oracle", "determinant and log-det identity suites")
    add("compare", "MO-PaDGAN vs vanilla GAN across seeds", data=True, surrogate=True)
    return p


# --- helpers -------------------------------------------------------------------


class Outputs:
    """Resolves output paths and refuses to clobber existing files without --force."""

    def __init__(self, root: Path, force: bool):
        self.root = root
        self.force = force

    def claim(self, *names: str) -> list[Path]:
        paths = [self.root / n for n in names]
        if not self.force:
            taken = [str(p) for p in paths if p.exists()]
            if taken:
                raise ValidationFailure(f"refusing to overwrite {', '.join(taken)} (use --force)")
        self.root.mkdir(parents=True, exist_ok=True)
        return paths


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    raise TypeError(f"cannot serialise {type(v).__name__}")


def _dataset(cfg: ExperimentConfig, path) -> np.ndarray:
    return ex.make_dataset(cfg) if path is None else ds.load_dataset(path)


def _surrogate(cfg: ExperimentConfig, path) -> ql.Surrogate | None:
    if cfg.train.quality_source != "surrogate":
        return None
    if path is None:
        return ex.fit_surrogate(cfg)
    ck = nn.load_checkpoint(path)
    return ql.Surrogate(ck.spec, ck.params, np.asarray(ck.extra.get("heldout_mse", []), dtype=float))


def _perf_header(k: int) -> list[str]:
    return [f"p{j + 1}" for j in range(k)]


# --- commands ------------------------------------------------------------------


def cmd_gen_data(cfg, args, out: Outputs) -> int:
    (path,) = out.claim("dataset.csv")
    ds.save_dataset(path, ex.make_dataset(cfg), dim=cfg.quality.dim)
    print(json.dumps({"dataset": str(path), "n_samples": cfg.dataset.n_samples}))
    return 0


def cmd_train_surrogate(cfg, args, out: Outputs) -> int:
    ck_path, metrics_path = out.claim("surrogate.ckpt.json", "surrogate_metrics.json")
    model = ex.fit_surrogate(cfg)
    nn.save_checkpoint(
        ck_path, nn.Checkpoint(model.spec, model.params, None, {"role": "surrogate", "heldout_mse": model.heldout_mse.tolist()})
    )
    metrics = {
        "heldout_rmse": model.heldout_rmse.tolist(),
        "n_samples": cfg.surrogate_samples,
        "epochs": cfg.surrogate.epochs,
    }
    _write_json(metrics_path, metrics)
    print(json.dumps(metrics))
    return 0


def cmd_train(cfg, args, out: Outputs) -> int:
    g_path, d_path, log_path = out.claim("generator.ckpt.json", "discriminator.ckpt.json", "train_log.csv")
    data = _dataset(cfg, args.data)
    gen, disc, tlog = ex.run_training(cfg, dataset=data, surrogate=_surrogate(cfg, args.surrogate))
    nn.save_checkpoint(g_path, gen.checkpoint())
    nn.save_checkpoint(d_path, disc.checkpoint())
    ds.save_table(log_path, tlog.columns, tlog.rows())
    last = tlog.records[-1] if tlog.records else {}
    print(json.dumps({"generator": str(g_path), "steps": cfg.train.steps, "last": last}, default=_jsonable))
    return 0


def cmd_evaluate(cfg, args, out: Outputs) -> int:
    paths = out.claim("diversity.csv", "report.json", "pareto.csv", "novelty.csv", "topk.csv")
    div_path, report_path, pareto_path, nov_path, topk_path = paths
    data = _dataset(cfg, args.data)
    if args.checkpoint:
        gen = gan.GeneratorState.from_checkpoint(nn.load_checkpoint(args.checkpoint))
        pool, source = ex.generator_pool(cfg, gen, cfg.seed), "generator"
    else:
        pool, source = ex.data_pool(cfg, data, cfg.seed), "data"
    rep = ex.evaluate_pool(cfg, pool, data, cfg.seed)

    ds.save_table(div_path, ["repetition", "diversity"], enumerate(rep.diversity.values.tolist()))
    k = rep.performances.shape[1]
    front = rep.pareto.front
    ds.save_table(
        pareto_path,
        ["index", *[f"x{i}" for i in range(pool.shape[1])], *_perf_header(k)],
        [[int(i), *pool[i].tolist(), *rep.performances[i].tolist()] for i in front],
    )
    ds.save_table(
        nov_path,
        ["index", "nearest_training_distance"],
        enumerate(rep.novelty.distances.tolist()),
    )
    topk_rows = [
        [table, rank + 1, r["index"], r["score"], *r["design"], *r["performance"]]
        for table, entries in rep.top.items()
        for rank, r in enumerate(entries)
    ]
    ds.save_table(
        topk_path,
        ["table", "rank", "index", "score", *[f"x{i}" for i in range(pool.shape[1])], *_perf_header(k)],
        topk_rows,
    )
    summary = {"source": source, "seed": cfg.seed, **rep.summary()}
    _write_json(report_path, summary)
    print(json.dumps(summary, default=_jsonable))
    return 0


def cmd_sample(cfg, args, out: Outputs) -> int:
    if args.checkpoint is None:
        raise ValidationFailure("sample needs --checkpoint")
    if args.count < 0:
        raise ValidationFailure("--count must be nonnegative")
    (path,) = out.claim("samples.csv")
    gen = gan.GeneratorState.from_checkpoint(nn.load_checkpoint(args.checkpoint))
    x = gan.sample(gen, args.count, cfg.seed)
    p = ql.evaluate_performance(cfg.quality, x) if len(x) else np.zeros((0, cfg.quality.n_objectives))
    ds.save_table(
        path,
        [*[f"x{i}" for i in range(gen.spec.n_out)], *_perf_header(cfg.quality.n_objectives)],
        np.hstack([x, p]).tolist(),
    )
    print(json.dumps({"samples": str(path), "count": args.count}))
    return 0


def _run_suites(results: list[verify.SuiteResult]) -> int:
    for r in results:
        print(json.dumps(r.to_dict()))
    ok = all(r.passed for r in results)
    print(json.dumps({"all_passed": ok, "max_error": max(r.max_error for r in results)}))
    return 0 if ok else 1


def cmd_gradcheck(cfg, args, out) -> int:
    return _run_suites(verify.gradcheck_suites(cfg.seed))


def cmd_oracle(cfg, args, out) -> int:
    return _run_suites(verify.oracle_suites(cfg.seed))


def cmd_compare(cfg, args, out: Outputs) -> int:
    csv_path, json_path = out.claim("compare.csv", "compare.json")
    data = _dataset(cfg, args.data)
    result = ex.compare(cfg, dataset=data, surrogate=_surrogate(cfg, args.surrogate))
    cols = result["columns"]
    ds.save_table(csv_path, cols, [[r.get(c) if r.get(c) is not None else "" for c in cols] for r in result["rows"]])
    _write_json(json_path, result)
    print(json.dumps({"wins": result["wins"], "n_pairs": result["n_pairs"]}))
    return 0


HANDLERS = {
    "gen-data": cmd_gen_data,
    "train-surrogate": cmd_train_surrogate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "sample": cmd_sample,
    "gradcheck": cmd_gradcheck,
    "oracle": cmd_oracle,
    "compare": cmd_compare,
}

_VALIDATION = (ValidationFailure, ConfigError, ValueError)


def _fail(exc: BaseException, code: int) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}), file=sys.stderr)
    return code


def run_command(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        out = Outputs(Path(args.out or cfg.output_dir), args.force)
        return HANDLERS[args.command](cfg, args, out)
    except _VALIDATION as exc:
        return _fail(exc, 1)
    except (PadganError, OSError, ArithmeticError) as exc:
        return _fail(exc, 2)


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
