"""Command-line experiment runner.

Subcommands ``simulate``, ``bound``, ``gain`` and ``validate``.  Results go to
CSV with one row per SNR point and the fixed header :data:`CSV_FIELDS`;
configs may also be given as JSON (``--config``), with flags overriding.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .analytic_bounds import bound_curve
from .analytic_gains import GainQuery, predicted_gain
from .codes import CodeValidationError, LinearCode, bundled_code, load_code
from .estimator_engine import (
    IsConfig,
    is_estimate,
    load_histogram,
    make_decoder,
    mc_estimate,
    save_histogram,
    simulated_is_gain,
)
from .ggd_channel import GgdParams, SnrPoint

__all__ = ["CSV_FIELDS", "ExperimentConfig", "ResultRow", "parse_snr_grid", "main"]

CSV_FIELDS = ["eb_n0_db", "wer", "relative_error", "samples", "wall_time_s", "is_gain",
              "truncation_tail", "bound_value"]


class ConfigError(ValueError):
    pass


def parse_snr_grid(text) -> list:
    """``"start:step:stop"`` (stop inclusive), a comma list, or a list of numbers."""
    if isinstance(text, (list, tuple)):
        grid = [float(x) for x in text]
    elif ":" in str(text):
        parts = str(text).split(":")
        if len(parts) != 3:
            raise ConfigError(f"SNR grid {text!r} is not start:step:stop")
        start, step, stop = (float(x) for x in parts)
        if step <= 0:
            raise ConfigError("SNR grid step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        grid = [round(start + i * step, 10) for i in range(count)]
    else:
        grid = [float(x) for x in str(text).split(",") if x.strip()]
    if not grid:
        raise ConfigError("SNR grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("SNR grid must be strictly ascending")
    return grid


@dataclass
class ExperimentConfig:
    command: str = "simulate"
    code_path: str = "bch_15_7"
    p: float = 1.0
    snr_grid: object = "3:1:7"
    estimator: str = "is"
    decoder: str = "mld"
    kappa_target: float = 0.1
    max_samples: int = 10 ** 8
    seed: int = 0
    workers: int = 1
    histogram_path: Optional[str] = None
    save_histogram_path: Optional[str] = None
    output_path: Optional[str] = None
    kind: str = "both"
    mc_budget: int = 20000
    simulated_path: Optional[str] = None
    resume: bool = False
    omit_timing: bool = False
    validate_samples: int = 200_000

    def __post_init__(self):
        self.snr_grid = parse_snr_grid(self.snr_grid)
        if not (0 < self.kappa_target < 1):
            raise ConfigError("kappa_target must lie in (0, 1)")
        if not self.p > 0:
            raise ConfigError("p must be positive")
        if self.estimator not in ("mc", "is"):
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if self.decoder not in ("mld", "sum_product"):
            raise ConfigError(f"unknown decoder {self.decoder!r}")
        if self.kind not in ("sphere", "union", "both"):
            raise ConfigError(f"unknown bound kind {self.kind!r}")


@dataclass
class ResultRow:
    eb_n0_db: float
    wer: Optional[float] = None
    relative_error: Optional[float] = None
    samples: Optional[int] = None
    wall_time_s: Optional[float] = None
    is_gain: Optional[float] = None
    truncation_tail: Optional[float] = None
    bound_value: Optional[float] = None

    def as_csv(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                out[f.name] = ""
            elif isinstance(v, float):
                out[f.name] = repr(v) if math.isfinite(v) else ("inf" if v > 0 else "nan")
            else:
                out[f.name] = str(v)
        return out


def _snr_key(x: float) -> str:
    return f"{float(x):.6f}"


def _load_code(spec: str) -> LinearCode:
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        return load_code(path)
    return bundled_code(spec)


def _completed(path: Path) -> set:
    if not path.exists() or path.stat().st_size == 0:
        return set()
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_FIELDS:
            raise ConfigError(f"{path}: existing file has a different header")
        return {_snr_key(row["eb_n0_db"]) for row in reader}


class _Writer:
    """Append rows to a CSV one at a time so partial results survive a crash."""

    def __init__(self, path: Optional[str], resume: bool):
        self.path = Path(path) if path else None
        self.done = set()
        if self.path is None:
            self.fh = sys.stdout
            self.writer = csv.DictWriter(self.fh, CSV_FIELDS, lineterminator="\n")
            self.writer.writeheader()
            return
        if resume:
            self.done = _completed(self.path)
        fresh = not (resume and self.path.exists() and self.path.stat().st_size > 0)
        self.fh = self.path.open("w" if fresh else "a", newline="")
        self.writer = csv.DictWriter(self.fh, CSV_FIELDS, lineterminator="\n")
        if fresh:
            self.writer.writeheader()
            self.fh.flush()

    def write(self, row: ResultRow):
        self.writer.writerow(row.as_csv())
        self.fh.flush()

    def close(self):
        if self.fh is not sys.stdout:
            self.fh.close()


def run_simulate(cfg: ExperimentConfig) -> int:
    code = _load_code(cfg.code_path)
    decoder = make_decoder(code, cfg.decoder)
    out = _Writer(cfg.output_path, cfg.resume)
    hist = None
    hist_src = cfg.histogram_path
    if cfg.resume and cfg.save_histogram_path and Path(cfg.save_histogram_path).exists():
        hist_src = cfg.save_histogram_path
    elif cfg.resume and out.done and cfg.estimator == "is" and not hist_src:
        print("lpis: warning: resuming without --save-histogram; remaining points start from a "
              "cold histogram and will differ from an uninterrupted run", file=sys.stderr)
    try:
        for idx, db in enumerate(cfg.snr_grid):
            params = GgdParams(cfg.p, SnrPoint(db, code.rate).sigma, code.n)
            if hist is None and hist_src and cfg.estimator == "is":
                hist = load_histogram(hist_src, code, params)
            if _snr_key(db) in out.done:
                continue
            seed = np.random.SeedSequence([cfg.seed, idx])
            if cfg.estimator == "mc":
                est = mc_estimate(code, decoder, params, cfg.kappa_target, cfg.max_samples,
                                  np.random.default_rng(seed))
                gain = None
            else:
                conf = IsConfig(kappa_target=cfg.kappa_target, max_samples=cfg.max_samples,
                                seed=cfg.seed, workers=cfg.workers)
                est, hist = is_estimate(code, decoder, params, conf, hist, seed)
                gain = simulated_is_gain(est)
                if cfg.save_histogram_path:
                    save_histogram(hist, cfg.save_histogram_path)
            out.write(ResultRow(db, est.wer, est.relative_error, est.samples,
                                None if cfg.omit_timing else est.wall_time, gain,
                                est.truncation_tail))
    finally:
        out.close()
    return 0


def _bound_rows(code, cfg, kind):
    curve = bound_curve(code, cfg.snr_grid, kind, cfg.p)
    return [ResultRow(pt.eb_n0_db, bound_value=float(v)) for pt, v in zip(curve.snr_points, curve.values)]


def run_bound(cfg: ExperimentConfig) -> int:
    code = _load_code(cfg.code_path)
    if cfg.kind in ("sphere", "both") and cfg.p != 1:
        raise ConfigError("the sphere bound is only available for Laplace noise (p = 1); "
                          "use --kind union for other shapes")
    kinds = ["sphere", "union"] if cfg.kind == "both" else [cfg.kind]
    for kind in kinds:
        name = {"sphere": "sphere_awln", "union": "union_awln" if cfg.p == 1 else "union_general"}[kind]
        target = cfg.output_path
        if target and cfg.kind == "both":
            base = Path(target)
            target = str(base.with_name(f"{base.stem}_{kind}{base.suffix or '.csv'}"))
        out = _Writer(target, False)
        try:
            for row in _bound_rows(code, cfg, name):
                out.write(row)
        finally:
            out.close()
    return 0


def _read_simulated(path) -> dict:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_FIELDS:
            raise ConfigError(f"{path}: not a result file")
        return {_snr_key(row["eb_n0_db"]): row for row in reader}


def _num(text, kind=float):
    return kind(text) if text not in ("", None) else None


def run_gain(cfg: ExperimentConfig) -> int:
    code = _load_code(cfg.code_path)
    if code.d_min is None or code.weight_distribution is None:
        raise ConfigError(f"{code.name}: gain prediction needs d_min and A_dmin")
    sims = _read_simulated(cfg.simulated_path) if cfg.simulated_path else {}
    out = _Writer(cfg.output_path, False)
    try:
        for idx, db in enumerate(cfg.snr_grid):
            sigma = SnrPoint(db, code.rate).sigma
            rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, idx]))
            pred = predicted_gain(GainQuery(code, cfg.p, sigma), cfg.mc_budget, rng)
            row = ResultRow(db, is_gain=float(pred.estimate))
            sim = sims.get(_snr_key(db))
            if sim is not None:
                row.wer = _num(sim["wer"])
                row.relative_error = _num(sim["relative_error"])
                row.samples = _num(sim["samples"], int)
                row.wall_time_s = _num(sim["wall_time_s"])
                row.truncation_tail = _num(sim["truncation_tail"])
                simulated = _num(sim["is_gain"])
                if simulated:
                    print(f"# {db:g} dB: predicted {pred.estimate:.4g}, simulated {simulated:.4g}, "
                          f"ratio {simulated / pred.estimate:.3f}", file=sys.stderr)
            out.write(row)
    finally:
        out.close()
    return 0


def run_validate(cfg: ExperimentConfig) -> int:
    from .validate import run_checks

    return 0 if run_checks(cfg.validate_samples, cfg.seed) else 1


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lpis", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, snr=True):
        sp.add_argument("--config", help="JSON file with ExperimentConfig fields")
        sp.add_argument("--code", dest="code_path", help="bundled code name or JSON code file")
        sp.add_argument("--p", type=float, help="GGD shape parameter")
        if snr:
            sp.add_argument("--snr", dest="snr_grid", help="Eb/N0 grid in dB, start:step:stop or a,b,c")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--output", dest="output_path", help="CSV output file (stdout if omitted)")

    sim = sub.add_parser("simulate", help="estimate the WER along an SNR grid")
    common(sim)
    sim.add_argument("--estimator", choices=["mc", "is"])
    sim.add_argument("--decoder", choices=["mld", "sum_product"])
    sim.add_argument("--kappa", dest="kappa_target", type=float)
    sim.add_argument("--max-samples", dest="max_samples", type=int)
    sim.add_argument("--workers", type=int)
    sim.add_argument("--histogram", dest="histogram_path", help="warm-start histogram (JSON)")
    sim.add_argument("--save-histogram", dest="save_histogram_path")
    sim.add_argument("--resume", action="store_true", default=None,
                     help="skip SNR points already present in the output file")
    sim.add_argument("--omit-timing", dest="omit_timing", action="store_true", default=None,
                     help="leave wall_time_s empty so reruns are byte-identical")

    bnd = sub.add_parser("bound", help="sphere and union bounds along an SNR grid")
    common(bnd)
    bnd.add_argument("--kind", choices=["sphere", "union", "both"])

    gn = sub.add_parser("gain", help="predicted asymptotic IS gain along an SNR grid")
    common(gn)
    gn.add_argument("--mc-budget", dest="mc_budget", type=int)
    gn.add_argument("--simulated", dest="simulated_path", help="simulate CSV to pair with")

    val = sub.add_parser("validate", help="run the self-check oracle suite")
    val.add_argument("--config")
    val.add_argument("--seed", type=int)
    val.add_argument("--samples", dest="validate_samples", type=int,
                     help="sample budget of the statistical checks")
    return ap


def build_config(argv=None) -> ExperimentConfig:
    args = _parser().parse_args(argv)
    values = {}
    if getattr(args, "config", None):
        try:
            values.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key, v in vars(args).items():
        if key in known and v is not None:
            values[key] = v
    values["command"] = args.command
    return ExperimentConfig(**values)


def main(argv=None) -> int:
    try:
        cfg = build_config(argv)
        run = {"simulate": run_simulate, "bound": run_bound, "gain": run_gain,
               "validate": run_validate}[cfg.command]
        return run(cfg)
    except (ConfigError, CodeValidationError, FileNotFoundError, ValueError) as exc:
        print(f"lpis: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
