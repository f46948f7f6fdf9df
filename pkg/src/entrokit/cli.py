"""
Command-line entry point.

    entrokit estimate --input data.csv --kernel epanechnikov --h 0.2
    entrokit validate --model normal:sigma=1 --n 20000 --seed 7 --kernel gaussian --h 0.3
    entrokit sweep    --model uniform --A 0.5 --B 2 --delta 0.2 --count 8 --n 1000,4000 --seeds 1..20
    entrokit bias     --model cosine --kernel poly:s=4 --h 0.2,0.1,0.05

Exit status is 0 on success, 1 for configuration or input errors and 2 for
numerical failures.  Errors go to standard error as ``ERROR:<kind>:<message>``.
Entropies are in nats unless ``--bits`` is given.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .density import (
    DataSet,
    DensityEstimate,
    EvaluationGrid,
    default_points_per_axis,
    kde_eval_grid,
    smoothed_density,
)
from .errors import DomainError, EntrokitError, NumericalError, ParseError
from .estimators import (
    EstimatorKind,
    ThresholdSchedule,
    centering_plugin,
    centering_resub,
    entropy_leave_one_out,
    plugin_from_values,
    resubstitution_from_values,
)
from .harness import (
    BandwidthRule,
    bias_probe,
    certainty_interval,
    deviation_statistic,
    interior_grid,
    support_estimate,
    sweep,
)
from .kernels import parse_kernel
from .models import parse_model, sample

__all__ = ["RunConfig", "ingest_csv", "main", "parse_int_list", "run", "write_csv"]

log = logging.getLogger("entrokit")

COMMANDS = ("estimate", "validate", "sweep", "bias")
_LN2 = math.log(2.0)


class ConfigError(EntrokitError):
    """Invalid command line or configuration."""

    kind = "config"


# ---------------------------------------------------------------------------
# data files
# ---------------------------------------------------------------------------


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def ingest_csv(path) -> DataSet:
    """Read an ``n x d`` dataset from a comma-separated file.

    A first row holding any non-numeric cell is taken as a header.  Blank
    lines are skipped.  Row numbers in error messages are 1-based file lines.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc
    rows = []
    width = None
    for lineno, cells in enumerate(csv.reader(io.StringIO(text)), start=1):
        cells = [c.strip() for c in cells]
        if not cells or cells == [""]:
            continue
        if not rows and width is None and not all(_is_number(c) for c in cells):
            width = len(cells)  # header
            continue
        if width is not None and len(cells) != width:
            raise ParseError(f"ragged row at row {lineno}: expected {width} fields, got {len(cells)}")
        width = len(cells)
        values = []
        for col, cell in enumerate(cells, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"non-numeric value {cell!r} at row {lineno}, column {col}") from None
            if not math.isfinite(v):
                raise ParseError(f"non-finite value {cell!r} at row {lineno}, column {col}")
            values.append(v)
        rows.append(values)
    if not rows:
        raise ParseError(f"{path} holds no data rows")
    return DataSet(np.array(rows, dtype=float))


def write_csv(data, path) -> None:
    """Write a dataset so that :func:`ingest_csv` reads it back bit for bit."""
    obs = data.observations if isinstance(data, DataSet) else np.atleast_2d(data)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in obs:
            writer.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def parse_int_list(text: str) -> list[int]:
    """``"1..5,9"`` -> ``[1, 2, 3, 4, 5, 9]``."""
    out: list[int] = []
    for part in filter(None, (p.strip() for p in str(text).split(","))):
        lo, dots, hi = part.partition("..")
        try:
            if dots:
                a, b = int(lo), int(hi)
                if b < a:
                    raise ConfigError(f"empty range {part!r}")
                out.extend(range(a, b + 1))
            else:
                out.append(int(float(part)) if float(part).is_integer() else int(part))
        except ValueError:
            raise ConfigError(f"bad integer list entry {part!r}") from None
    if not out:
        raise ConfigError(f"empty integer list {text!r}")
    return out


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(p) for p in str(text).split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"bad number list {text!r}") from None
    if not vals:
        raise ConfigError(f"empty number list {text!r}")
    return vals


@dataclass
class RunConfig:
    """Fully resolved settings for one command."""

    command: str
    input_path: str | None = None
    model: str | None = None
    kernel: str = "epanechnikov"
    h: float | None = None
    h_list: list[float] | None = None
    A: float = 0.5
    B: float = 2.0
    delta: float = 0.2
    count: int = 16
    beta: float = 0.25
    alpha: float = 1.0
    points_per_axis: int | None = None
    lower: list[float] | None = None
    upper: list[float] | None = None
    seeds: list[int] = field(default_factory=lambda: [0])
    n_list: list[int] | None = None
    estimators: list[str] = field(
        default_factory=lambda: [EstimatorKind.PLUGIN.value, EstimatorKind.RESUBSTITUTION.value]
    )
    interval_form: str = "inverse_gamma4"
    output_path: str | None = None
    format: str = "json"
    bits: bool = False

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.command == "estimate":
            if not self.input_path or self.model:
                raise ConfigError("estimate needs --input and no --model")
        elif not self.model or self.input_path:
            raise ConfigError(f"{self.command} needs --model and no --input")
        if self.command in ("estimate", "validate") and self.h is None:
            raise ConfigError(f"{self.command} needs --h")
        if self.command == "validate" and (not self.n_list or len(self.n_list) != 1):
            raise ConfigError("validate needs a single --n")
        if self.command == "sweep" and not self.n_list:
            raise ConfigError("sweep needs --n")
        if self.command == "bias" and not self.h_list:
            raise ConfigError("bias needs --h with a comma-separated list")
        if self.h is not None and not 0 < self.h <= 1:
            raise ConfigError(f"bandwidth must lie in (0, 1], got {self.h}")
        if self.n_list and min(self.n_list) < 3:
            raise ConfigError("sample sizes must be at least 3")
        if self.points_per_axis is not None and self.points_per_axis < 2:
            raise ConfigError("--points must be at least 2")
        if (self.lower is None) != (self.upper is None):
            raise ConfigError("--lower and --upper go together")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.format!r}")
        for e in self.estimators:
            try:
                EstimatorKind(e)
            except ValueError:
                raise ConfigError(
                    f"unknown estimator {e!r}; choose from {[k.value for k in EstimatorKind]}"
                ) from None

    def echo(self) -> dict:
        """The settings that influence results, for output headers."""
        keep = {
            "estimate": ("input_path", "kernel", "h", "beta", "alpha", "points_per_axis", "lower", "upper",
                         "estimators", "interval_form"),
            "validate": ("model", "kernel", "h", "beta", "alpha", "points_per_axis", "lower", "upper",
                         "estimators", "interval_form", "n_list", "seeds"),
            "sweep": ("model", "kernel", "A", "B", "delta", "count", "beta", "alpha", "points_per_axis",
                      "estimators", "interval_form", "n_list", "seeds"),
            "bias": ("model", "kernel", "h_list", "points_per_axis", "lower", "upper"),
        }[self.command]
        out = {k: getattr(self, k) for k in keep}
        out["command"] = self.command
        out["unit"] = "bits" if self.bits else "nats"
        out["version"] = __version__
        return out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _grid(cfg: RunConfig, data, kernel, h) -> EvaluationGrid:
    if cfg.lower is not None:
        ppa = cfg.points_per_axis or default_points_per_axis(kernel.dimension)
        return EvaluationGrid(tuple(cfg.lower), tuple(cfg.upper), ppa)
    return EvaluationGrid.covering(data, kernel, h, cfg.points_per_axis)


def _interval(cfg: RunConfig, est, gamma, grid, support_est, values, center) -> dict:
    try:
        ci = certainty_interval(
            est, gamma, grid, support_est, values=values, center=center, form=cfg.interval_form
        )
    except DomainError as exc:
        return {"unavailable": str(exc)}
    return {
        "center": ci.center,
        "half_width": ci.half_width,
        "lower": ci.lower,
        "upper": ci.upper,
        "zeta_hat": ci.zeta_hat,
        "form": cfg.interval_form,
    }


def _estimate_block(cfg: RunConfig, data, kernel, model=None) -> dict:
    """Estimates (and, with a model, centerings and deviations) at one bandwidth."""
    h = cfg.h
    n = data.n
    schedule = ThresholdSchedule(cfg.beta, cfg.alpha)
    gamma = schedule(n)
    est = DensityEstimate(data, kernel, h)
    grid = _grid(cfg, data, kernel, h)
    values = kde_eval_grid(est, grid)
    results = []
    interval = None
    for name in cfg.estimators:
        kind = EstimatorKind(name)
        item: dict = {"estimator": kind.value}
        if kind is EstimatorKind.PLUGIN:
            value, excluded, mask = plugin_from_values(values, grid.cell_volume, gamma)
            item.update(gamma=gamma, excluded_fraction=excluded)
            flags = []
            if grid.cell_diameter > h / 2:
                flags.append("coarse_grid")
            if not mask.any():
                flags.append("empty_level_set")
            item["flags"] = flags
            if model is not None:
                item["centering"] = centering_plugin(model, kernel, h, gamma, mask, grid)
            interval = _interval(cfg, est, gamma, grid, support_estimate(data, model), values, value)
        elif kind is EstimatorKind.RESUBSTITUTION:
            fhat = est.at_observations()
            value, excluded, mask = resubstitution_from_values(fhat, gamma)
            item.update(gamma=gamma, excluded_fraction=excluded, flags=[] if mask.any() else ["empty_level_set"])
            if model is not None:
                item["centering"] = -centering_resub(model, kernel, h, est, gamma, fhat=fhat)
        else:
            value = entropy_leave_one_out(data, kernel, h).value
            item.update(gamma=0.0, excluded_fraction=0.0, flags=[])
            if model is not None:
                ef = smoothed_density(model, kernel, h, est.sorted_observations)
                item["centering"] = -math.fsum(np.log(ef[ef > 0])) / n
        item["estimate"] = value
        if "centering" in item:
            item["deviation"] = abs(value - item["centering"])
            if n > math.e**math.e:
                item["normalized_deviation"] = deviation_statistic(kind, n, h, gamma, value, item["centering"])
        if model is not None:
            item["true_entropy"] = model.entropy_closed_form
            item["abs_error"] = abs(value - model.entropy_closed_form)
        results.append(item)
    out = {"n": n, "d": data.d, "h": h, "gamma": gamma, "estimates": results}
    if interval is not None:
        out["interval"] = interval
        if model is not None and "lower" in interval:
            out["interval"]["contains_true_entropy"] = interval["lower"] <= model.entropy_closed_form <= interval["upper"]
    if model is not None:
        out["true_entropy"] = model.entropy_closed_form
    return out


_ENTROPY_KEYS = {
    "estimate", "centering", "deviation", "normalized_deviation", "true_entropy", "abs_error",
    "center", "half_width", "lower", "upper", "interval_lower", "interval_upper",
}


def _to_bits(obj):
    """Divide every entropy-valued field by log 2 (presentation only)."""
    if isinstance(obj, dict):
        return {k: (v / _LN2 if k in _ENTROPY_KEYS and isinstance(v, float) else _to_bits(v)) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_to_bits(v) for v in obj]
    return obj


def _dump_json(payload) -> str:
    def default(o):
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        raise TypeError(f"cannot serialise {type(o).__name__}")

    return json.dumps(payload, indent=2, sort_keys=True, default=default, allow_nan=False) + "\n"


def _header(cfg: RunConfig) -> str:
    return "# config: " + json.dumps(cfg.echo(), sort_keys=True) + "\n"


def _estimates_csv(cfg: RunConfig, block: dict) -> str:
    cols = ["estimator", "n", "h", "gamma", "estimate", "excluded_fraction", "flags", "centering",
            "deviation", "normalized_deviation", "true_entropy", "abs_error", "interval_lower", "interval_upper"]
    buf = io.StringIO()
    buf.write(_header(cfg))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    interval = block.get("interval", {})
    for item in block["estimates"]:
        row = dict(item, n=block["n"], h=block["h"], flags=";".join(item.get("flags", [])))
        if item["estimator"] == EstimatorKind.PLUGIN.value and "lower" in interval:
            row["interval_lower"], row["interval_upper"] = interval["lower"], interval["upper"]
        w.writerow(["" if row.get(c) is None else (repr(row[c]) if isinstance(row[c], float) else row[c]) for c in cols])
    return buf.getvalue()


def _run_estimate(cfg: RunConfig) -> str:
    data = ingest_csv(cfg.input_path)
    kernel = parse_kernel(cfg.kernel, data.d)
    block = _estimate_block(cfg, data, kernel)
    if cfg.bits:
        block = _to_bits(block)
    if cfg.format == "csv":
        return _estimates_csv(cfg, block)
    return _dump_json({"config": cfg.echo(), **block})


def _run_validate(cfg: RunConfig) -> str:
    model = parse_model(cfg.model)
    kernel = parse_kernel(cfg.kernel, model.dimension)
    n, seed = cfg.n_list[0], cfg.seeds[0]
    data = sample(model, n, seed)
    block = _estimate_block(cfg, data, kernel, model)
    if cfg.bits:
        block = _to_bits(block)
    if cfg.format == "csv":
        return _estimates_csv(cfg, block)
    return _dump_json({"config": cfg.echo(), **block})


def _run_sweep(cfg: RunConfig) -> str:
    model = parse_model(cfg.model)
    kernel = parse_kernel(cfg.kernel, model.dimension)
    rule = BandwidthRule(cfg.A, cfg.B, cfg.delta, cfg.count, model.dimension)
    report = sweep(
        model,
        kernel,
        rule,
        ThresholdSchedule(cfg.beta, cfg.alpha),
        cfg.n_list,
        cfg.seeds,
        cfg.estimators,
        points_per_axis=cfg.points_per_axis,
        interval_form=cfg.interval_form,
    )
    bad = [r for r in report.rows if not r.ok]
    if bad:
        log.warning("%d of %d sweep rows failed (see the status column)", len(bad), len(report.rows))
    if cfg.bits:
        keys = [k for k in _ENTROPY_KEYS if k in {f.name for f in dataclasses.fields(report.rows[0])}]
        report.rows = [
            dataclasses.replace(r, **{k: getattr(r, k) / _LN2 for k in keys if getattr(r, k) is not None})
            for r in report.rows
        ]
    report.config = cfg.echo()
    if cfg.format == "json":
        return _dump_json(report.summary())
    return report.to_csv()


def _run_bias(cfg: RunConfig) -> str:
    model = parse_model(cfg.model)
    kernel = parse_kernel(cfg.kernel, model.dimension)
    grid = None
    if cfg.lower is not None:
        grid = EvaluationGrid(tuple(cfg.lower), tuple(cfg.upper), cfg.points_per_axis or 201)
    elif cfg.points_per_axis is not None:
        grid = interior_grid(model, max(cfg.h_list) * kernel.eval_radius, cfg.points_per_axis)
    probe = bias_probe(model, kernel, cfg.h_list, grid)
    if cfg.format == "json":
        rows = [{"h": h, "sup_bias": b} for h, b in zip(probe.h, probe.sup_bias)]
        return _dump_json({"config": cfg.echo(), "rows": rows, "slope": probe.slope, "kernel_order": kernel.order})
    buf = io.StringIO()
    buf.write(_header(cfg))
    buf.write(f"# slope: {'' if probe.slope is None else repr(probe.slope)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["h", "sup_bias"])
    for h, b in zip(probe.h, probe.sup_bias):
        w.writerow([repr(h), repr(b)])
    return buf.getvalue()


_RUNNERS = {
    "estimate": _run_estimate,
    "validate": _run_validate,
    "sweep": _run_sweep,
    "bias": _run_bias,
}


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute a configuration and return the exit status."""
    stdout = stdout or sys.stdout
    try:
        cfg.validate()
        text = _RUNNERS[cfg.command](cfg)
        if cfg.output_path:
            with open(cfg.output_path, "w", newline="") as fh:
                fh.write(text)
        else:
            stdout.write(text)
    except NumericalError as exc:
        print(f"ERROR:{exc.kind}:{exc}", file=sys.stderr)
        return 2
    except EntrokitError as exc:
        print(f"ERROR:{exc.kind}:{exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"ERROR:io:{exc}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_common(p: argparse.ArgumentParser, *, model: bool) -> None:
    if model:
        p.add_argument("--model", required=True, help="model spec, e.g. normal:sigma=1")
    else:
        p.add_argument("--input", dest="input_path", required=True, help="CSV file of observations")
    p.add_argument("--kernel", default="epanechnikov",
                   help="boxcar | epanechnikov | gaussian | double_exponential | poly:s=<even int>")
    p.add_argument("--points", dest="points_per_axis", type=int, default=None,
                   help="grid points per axis (default 401 for d=1, 101 for d=2, 41 above)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--output", dest="output_path", default=None, help="write here instead of stdout")
    p.add_argument("--bits", action="store_true", help="report entropies in bits")


def _add_threshold(p: argparse.ArgumentParser) -> None:
    p.add_argument("--beta", type=float, default=0.25, help="threshold scale (default 0.25)")
    p.add_argument("--alpha", type=float, default=1.0, help="threshold log-decay exponent (default 1)")
    p.add_argument("--estimators", default="plugin_integral,resubstitution",
                   help="comma list of plugin_integral, resubstitution, leave_one_out")
    p.add_argument("--interval-form", choices=("inverse_gamma4", "gamma4"), default="inverse_gamma4",
                   help="certainty-interval half width scaling: gamma^-4 (inverse_gamma4) or gamma^4 (gamma4)")


def _add_bounds(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lower", default=None, help="explicit grid lower corner, comma list")
    p.add_argument("--upper", default=None, help="explicit grid upper corner, comma list")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="entrokit", description="Kernel entropy estimation and validation.")
    parser.add_argument("--version", action="version", version=f"entrokit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="estimate entropy from a CSV file")
    _add_common(p, model=False)
    p.add_argument("--h", type=float, required=True, help="bandwidth in (0, 1]")
    _add_threshold(p)
    _add_bounds(p)

    p = sub.add_parser("validate", help="estimate on a model sample and compare with the truth")
    _add_common(p, model=True)
    p.add_argument("--h", type=float, required=True, help="bandwidth in (0, 1]")
    p.add_argument("--n", required=True, help="sample size")
    p.add_argument("--seed", default="0", help="sampling seed")
    _add_threshold(p)
    _add_bounds(p)

    p = sub.add_parser("sweep", help="bandwidth sweep over a ladder of sample sizes")
    _add_common(p, model=True)
    p.add_argument("--A", type=float, default=0.5, help="lower bandwidth constant")
    p.add_argument("--B", type=float, default=2.0, help="upper bandwidth constant")
    p.add_argument("--delta", type=float, default=0.2, help="bandwidth exponent")
    p.add_argument("--count", type=int, default=16, help="bandwidths per grid")
    p.add_argument("--n", required=True, help="sample sizes, e.g. 1000,4000,16000")
    p.add_argument("--seeds", default="1..20", help="seeds, e.g. 1..20 or 1,2,5")
    _add_threshold(p)

    p = sub.add_parser("bias", help="sup-bias of the smoothed density against h")
    _add_common(p, model=True)
    p.add_argument("--h", required=True, help="bandwidths, comma list")
    _add_bounds(p)
    return parser


def config_from_args(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    args = vars(ns)
    cmd = args.pop("command")
    cfg = RunConfig(command=cmd)
    fmt = args.pop("format")
    cfg.format = fmt or ("csv" if cmd == "sweep" else "json")
    for key in ("lower", "upper"):
        if args.get(key) is not None:
            setattr(cfg, key, _float_list(args.pop(key)))
        args.pop(key, None)
    if "estimators" in args:
        cfg.estimators = [e.strip() for e in args.pop("estimators").split(",") if e.strip()]
    if "n" in args:
        cfg.n_list = parse_int_list(args.pop("n"))
    if "seed" in args:
        cfg.seeds = parse_int_list(args.pop("seed"))
    if "seeds" in args:
        cfg.seeds = parse_int_list(args.pop("seeds"))
    if cmd == "bias":
        cfg.h_list = _float_list(args.pop("h"))
    for key, value in args.items():
        setattr(cfg, key, value)
    return cfg


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="WARNING:%(message)s", stream=sys.stderr)
    try:
        cfg = config_from_args(argv)
    except EntrokitError as exc:
        print(f"ERROR:{exc.kind}:{exc}", file=sys.stderr)
        return 1
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
