"""Command-line entry point.

Subcommands:
  train    -- run an experiment and emit summary/CSV/figures
  metrics  -- recompute floor and minimum-available-epoch metrics from a CSV
  selftest -- oracle-equivalence and gradient-check suites
  bench    -- T-product timing smoke check

Any flag may also be set in a key=value config file (--config); command
line takes precedence.  The dataset directory may come from the
TUBALAUG_DATA_DIR environment variable.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from .augment import TAdafParams
from .errors import ConfigError
from .harness import DATA_DIR_ENV, ExperimentConfig, train
from .metrics import min_available_epochs
from .network import build_mlp
from .selfcheck import gradient_check, tprod_equivalence_error, tprod_timing


def _read_config_file(path) -> dict:
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"bad config line: {raw.rstrip()}")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _coerce(value: str, target_type):
    if target_type is bool:
        return value.lower() in ("1", "true", "yes", "on")
    return target_type(value)


def _build_train_parser(sub):
    p = sub.add_parser("train", help="run an experiment")
    p.add_argument("--config", help="key=value config file")
    defaults = ExperimentConfig()
    for f in dataclasses.fields(ExperimentConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.type == "bool" or isinstance(defaults.__dict__[f.name], bool):
            p.add_argument(flag, default=None,
                           choices=["true", "false"], help=f"default {getattr(defaults, f.name)}")
        else:
            p.add_argument(flag, default=None,
                           help=f"default {getattr(defaults, f.name)!r}")
    return p


def _config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    file_values = _read_config_file(args.config) if args.config else {}
    for f in dataclasses.fields(ExperimentConfig):
        target_type = type(getattr(cfg, f.name))
        if f.name in file_values:
            setattr(cfg, f.name, _coerce(file_values[f.name], target_type))
        cli_value = getattr(args, f.name, None)
        if cli_value is not None:
            setattr(cfg, f.name, _coerce(cli_value, target_type))
    return cfg.validate()


def _cmd_train(args) -> int:
    from .report import emit_report

    cfg = _config_from_args(args)
    report = train(cfg)
    paths = emit_report(report, cfg.out_dir, figures=cfg.figures)
    for r in report.variants:
        t = r.t_ava if r.t_ava is not None else "-"
        print(f"{r.name}: best acc {r.lambda_max:.4f}, "
              f"floor {report.lambda_floor:.2f}, t_ava {t}")
    print(f"params: base {report.base_params}, "
          f"additional {report.additional_params} "
          f"({report.param_ratio * 100:.4f}%)")
    for key, path in sorted(paths.items()):
        print(f"wrote {key}: {path}")
    return 0


def _cmd_metrics(args) -> int:
    from .report import read_series_csv

    variants = read_series_csv(args.series)
    if args.baseline not in variants:
        raise ConfigError(f"baseline variant {args.baseline!r} not in CSV "
                          f"(found {sorted(variants)})")
    names = [args.baseline] + sorted(n for n in variants if n != args.baseline)
    lam, floor, t_avas = min_available_epochs(
        [variants[n] for n in names], variants[args.baseline])
    print(f"baseline lambda_max {lam:.4f}, floor {floor:.2f}")
    for name, t in zip(names, t_avas):
        print(f"{name}: t_ava {t if t is not None else '-'}")
    return 0


def _cmd_selftest(args) -> int:
    err = tprod_equivalence_error(cases=args.cases, seed=0)
    ok1 = err < 1e-10
    print(f"t-product route equivalence: max err {err:.3e} "
          f"({'PASS' if ok1 else 'FAIL'})")

    rng = np.random.default_rng(0)
    model = build_mlp((6, 6), 3, hidden=8, seed=0)
    params = TAdafParams.identity_init(6, 6)
    params.w1 += rng.normal(0, 0.05, size=params.w1.shape)
    params.w2 += rng.normal(0, 0.05, size=params.w2.shape)
    img = rng.uniform(-1, 1, size=(6, 6, 3))
    worst = gradient_check(img, 1, params, model)
    ok2 = worst < 1e-4
    print(f"composed gradient check: max rel err {worst:.3e} "
          f"({'PASS' if ok2 else 'FAIL'})")
    return 0 if ok1 and ok2 else 1


def _cmd_bench(args) -> int:
    ratios = tprod_timing()
    print(f"tprod_fft   p=64/p=32 runtime ratio: {ratios['fft']:.2f}")
    print(f"tprod_naive p=64/p=32 runtime ratio: {ratios['naive']:.2f}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tubalaug",
        description="T-product data augmentation experiments "
                    f"(dataset dir: ${DATA_DIR_ENV} or --data-dir)")
    sub = parser.add_subparsers(dest="command", required=True)

    _build_train_parser(sub)

    p = sub.add_parser("metrics", help="recompute metrics from a series CSV")
    p.add_argument("series", help="path to an emitted series.csv")
    p.add_argument("--baseline", default="baseline",
                   help="variant name used as the reference series")

    p = sub.add_parser("selftest", help="oracle and gradient suites")
    p.add_argument("--cases", type=int, default=100)

    sub.add_parser("bench", help="T-product timing smoke check")

    args = parser.parse_args(argv)
    handlers = {"train": _cmd_train, "metrics": _cmd_metrics,
                "selftest": _cmd_selftest, "bench": _cmd_bench}
    try:
        return handlers[args.command](args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
