"""Batch command-line front-end.

Three subcommands:
  eval      one metric at one parameter point,
  sweep     one metric along an axis (target rate, loop-interference
            variance in dB, sector count, or density), any engine,
  validate  the analytic-vs-Monte-Carlo cross-check grid with a pass/fail
            line per cell (nonzero exit on any failure).

Results are emitted as CSV or JSON rows that carry the full configuration,
so any row can be re-run exactly; identical invocations produce
byte-identical files.  dB values appear only here; the engines work in
linear units throughout.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import analytic, montecarlo
from .analytic import OutageQuery
from .model import NetworkParams, db_to_linear, linear_to_db
from .montecarlo import SimConfig

METRICS = ("outage-uplink", "outage-downlink", "sum-rate")
METHODS = ("analytic", "montecarlo", "asymptotic", "both")
SWEEP_VARS = ("R", "sigma_l2_db", "m", "lambda")

COLUMNS = [
    "arch", "link", "metric", "method", "swept_var", "swept_value", "R",
    "lambda", "m_b", "m_u", "gamma", "alpha1", "alpha2", "p_b", "p_u",
    "sigma_n2_db", "sigma_l2_db", "suppression", "nearest_bs_mode",
    "value", "uncertainty", "trials", "seed",
]

# cross-validation grid (matches the acceptance gate)
GRID_M = (1, 2, 4, 8)
GRID_SIGMA_DB = (None, -30.0, -20.0, -10.0)      # None = loop interference off
GRID_RATES = (0.01, 0.1, 1.0)


@dataclass(frozen=True)
class SweepSpec:
    """A fully validated run request."""

    metric: str
    method: str
    rate: float
    params: NetworkParams
    sim: SimConfig
    sweep_var: str | None = None
    sweep_values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.sweep_var is not None and len(self.sweep_values) == 0:
            raise ValueError("sweep range is empty")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdcell",
        description="Full-duplex cellular network performance toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--rate", type=float, default=0.1,
                       help="target rate R in bits per channel use (default 0.1)")
        p.add_argument("--lambda", dest="lam", type=float, default=1e-2,
                       help="BS/user density (default 1e-2)")
        p.add_argument("--mu", type=float, default=1.0, help="fading rate (default 1)")
        p.add_argument("--gamma", type=float, default=0.2,
                       help="side-lobe to main-lobe ratio, both node kinds (default 0.2)")
        p.add_argument("--alpha1", type=float, default=4.0,
                       help="BS<->user path-loss exponent (default 4)")
        p.add_argument("--alpha2", type=float, default=4.0,
                       help="BS<->BS and user<->user path-loss exponent (default 4)")
        p.add_argument("--p-b", type=float, default=1.0, help="BS power, linear (default 1)")
        p.add_argument("--p-u", type=float, default=1.0, help="user power, linear (default 1)")
        p.add_argument("--sigma-n2-db", type=float, default=float("-inf"),
                       help="noise variance in dB (default -inf: interference-limited)")
        p.add_argument("--sigma-l2-db", type=float, default=-30.0,
                       help="residual loop-interference variance in dB (default -30)")
        p.add_argument("--m", type=int, default=4,
                       help="antenna sectors at both node kinds (default 4)")
        p.add_argument("--m-b", type=int, default=None, help="override BS sector count")
        p.add_argument("--m-u", type=int, default=None, help="override user sector count")
        p.add_argument("--metric", choices=METRICS, default="outage-uplink")
        p.add_argument("--method", choices=METHODS, default="analytic")
        p.add_argument("--arch", choices=montecarlo.ARCHITECTURES, default="three-node")
        p.add_argument("--suppression", choices=("on", "off"), default="on")
        p.add_argument("--nearest-bs-mode", choices=montecarlo.NEAREST_BS_MODES,
                       default="beyond-nearest")
        p.add_argument("--trials", type=int, default=100_000)
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--window-radius", type=float, default=None,
                       help="sampling disk radius (default 20/sqrt(pi*lambda))")
        p.add_argument("--config", type=str, default=None,
                       help="key=value file; keys match the long flags without dashes")
        p.add_argument("--output", type=str, default="-",
                       help="destination path, '-' for stdout (default)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p_eval = sub.add_parser("eval", help="evaluate one point")
    common(p_eval)

    p_sweep = sub.add_parser("sweep", help="sweep one variable")
    common(p_sweep)
    p_sweep.add_argument("--sweep-var", choices=SWEEP_VARS, required=True)
    p_sweep.add_argument("--sweep-start", type=float, default=None)
    p_sweep.add_argument("--sweep-stop", type=float, default=None)
    p_sweep.add_argument("--sweep-step", type=float, default=None)
    p_sweep.add_argument("--sweep-values", type=str, default=None,
                         help="comma-separated values (overrides start/stop/step)")

    p_val = sub.add_parser("validate", help="run the engine cross-check grid")
    common(p_val)
    p_val.add_argument("--grid-m", type=str, default=None,
                       help="comma-separated sector counts (default 1,2,4,8)")
    p_val.add_argument("--grid-sigma-db", type=str, default=None,
                       help="comma-separated dB values, 'off' allowed (default off,-30,-20,-10)")
    p_val.add_argument("--grid-rates", type=str, default=None,
                       help="comma-separated rates (default 0.01,0.1,1)")
    return parser


def _inject_config_file(argv: list[str]) -> list[str]:
    """Prepend key=value file entries as flags so the command line wins."""
    if "--config" not in argv:
        return argv
    path = argv[argv.index("--config") + 1]
    injected: list[str] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            injected += [f"--{key.strip()}", value.strip()]
    return argv[:1] + injected + argv[1:]


def parse_config(argv: list[str]) -> argparse.Namespace:
    """Parse flags (plus optional config file) into a validated namespace.

    Domain violations and contradictory method/metric combinations abort
    with a usage error naming the offending field.
    """
    parser = _build_parser()
    try:
        argv = _inject_config_file(list(argv))
    except OSError as exc:
        parser.error(f"config: {exc}")
    ns = parser.parse_args(argv)
    try:
        ns.spec = build_spec(ns)
    except ValueError as exc:
        parser.error(str(exc))
    return ns


def build_spec(ns: argparse.Namespace) -> SweepSpec:
    params = NetworkParams(
        lam=ns.lam, mu=ns.mu, p_b=ns.p_b, p_u=ns.p_u,
        alpha1=ns.alpha1, alpha2=ns.alpha2,
        sigma_n2=float(db_to_linear(ns.sigma_n2_db)),
        sigma_l2=float(db_to_linear(ns.sigma_l2_db)),
        m_b=ns.m_b if ns.m_b is not None else ns.m,
        m_u=ns.m_u if ns.m_u is not None else ns.m,
        gamma_b=ns.gamma, gamma_u=ns.gamma,
    )
    sim = SimConfig(
        trials=ns.trials, seed=ns.seed, window_radius=ns.window_radius,
        arch=ns.arch, suppression=ns.suppression == "on",
        nearest_bs_mode=ns.nearest_bs_mode,
    )
    if ns.rate <= 0:
        raise ValueError("rate: target rate must be positive")
    if ns.method == "asymptotic" and ns.metric == "sum-rate":
        raise ValueError("method: no asymptotic sum-rate expression is available")
    if ns.method in ("analytic", "both", "asymptotic") and ns.arch == "two-node":
        raise ValueError("method: the two-node architecture is simulation-only (use --method montecarlo)")

    sweep_var = getattr(ns, "sweep_var", None)
    values: tuple[float, ...] = ()
    if sweep_var is not None:
        if ns.sweep_values:
            values = tuple(float(v) for v in ns.sweep_values.split(","))
        else:
            if ns.sweep_start is None or ns.sweep_stop is None or ns.sweep_step is None:
                raise ValueError("sweep-start/stop/step: a sweep needs a range or explicit values")
            if ns.sweep_step <= 0:
                raise ValueError("sweep-step: must be positive")
            if ns.sweep_stop < ns.sweep_start:
                raise ValueError("sweep-stop: must not precede sweep-start")
            count = int(math.floor((ns.sweep_stop - ns.sweep_start) / ns.sweep_step + 1e-9)) + 1
            values = tuple(ns.sweep_start + k * ns.sweep_step for k in range(count))
        if not values:
            raise ValueError("sweep range is empty")
        if sweep_var == "R" and ns.metric == "sum-rate":
            raise ValueError("sweep-var: the sum rate does not depend on a target rate R")
        if sweep_var == "m" and any(v != int(v) or v < 1 for v in values):
            raise ValueError("sweep-values: sector counts must be positive integers")
    return SweepSpec(metric=ns.metric, method=ns.method, rate=ns.rate,
                     params=params, sim=sim, sweep_var=sweep_var, sweep_values=values)


# ---------------------------------------------------------------------------
# running sweeps
# ---------------------------------------------------------------------------

def _apply_sweep(spec: SweepSpec, value: float) -> tuple[float, NetworkParams]:
    rate, params = spec.rate, spec.params
    if spec.sweep_var == "R":
        rate = float(value)
    elif spec.sweep_var == "sigma_l2_db":
        params = dataclasses.replace(params, sigma_l2=float(db_to_linear(value)))
    elif spec.sweep_var == "m":
        params = dataclasses.replace(params, m_b=int(value), m_u=int(value))
    elif spec.sweep_var == "lambda":
        params = dataclasses.replace(params, lam=float(value))
    return rate, params


def _evaluate(spec: SweepSpec, method: str, rate: float, params: NetworkParams):
    """One (method, point) evaluation; returns (link, value, uncertainty)."""
    sim = spec.sim
    suppression = sim.suppression
    if spec.metric == "sum-rate":
        if method == "analytic":
            res = analytic.sum_rate(params, suppression)
            return "both", res.total, res.uncertainty
        est = montecarlo.estimate_sum_rate(params, sim)
        return "both", est.value, est.uncertainty

    link = "uplink" if spec.metric == "outage-uplink" else "downlink"
    if method == "analytic":
        query = OutageQuery(rate=rate, params=params, suppression=suppression, link=link)
        est = analytic.evaluate_outage(query)
        return link, est.value, est.uncertainty
    if method == "asymptotic":
        if link == "downlink":
            return link, analytic.asymptotic_outage_downlink(rate, params.gamma_b), 0.0
        value = analytic.asymptotic_outage_uplink(rate, params)
        return link, value, analytic.DEFAULT_SPEC.rel_tol * max(value, 1.0)
    est = montecarlo.estimate_outage(params, sim, link, rate)
    return link, est.value, est.uncertainty


def _row(spec: SweepSpec, method: str, link: str, swept_value, rate: float,
         params: NetworkParams, value: float, uncertainty: float) -> dict:
    sim = spec.sim
    return {
        "arch": sim.arch, "link": link, "metric": spec.metric, "method": method,
        "swept_var": spec.sweep_var or "", "swept_value": swept_value if spec.sweep_var else "",
        "R": rate, "lambda": params.lam, "m_b": params.m_b, "m_u": params.m_u,
        "gamma": params.gamma_b, "alpha1": params.alpha1, "alpha2": params.alpha2,
        "p_b": params.p_b, "p_u": params.p_u,
        "sigma_n2_db": linear_to_db(params.sigma_n2), "sigma_l2_db": linear_to_db(params.sigma_l2),
        "suppression": "on" if sim.suppression else "off",
        "nearest_bs_mode": sim.nearest_bs_mode,
        "value": value, "uncertainty": uncertainty,
        "trials": sim.trials, "seed": sim.seed,
    }


def run_sweep(spec: SweepSpec) -> list[dict]:
    """Evaluate every (sweep point, method) combination into result rows.

    A failing evaluation marks its row with NaNs and the run continues; the
    error is reported on stderr.
    """
    points = spec.sweep_values if spec.sweep_var else (None,)
    methods = ("analytic", "montecarlo") if spec.method == "both" else (spec.method,)
    rows = []
    for point in points:
        rate, params = (spec.rate, spec.params) if point is None else _apply_sweep(spec, point)
        for method in methods:
            try:
                link, value, unc = _evaluate(spec, method, rate, params)
            except Exception as exc:      # row-level marker, run continues
                print(f"fdcell: point {point!r} method {method}: {exc}", file=sys.stderr)
                link = {"outage-uplink": "uplink", "outage-downlink": "downlink"}.get(
                    spec.metric, "both")
                value = unc = float("nan")
            rows.append(_row(spec, method, link, point, rate, params, value, unc))
    return rows


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def _format_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)          # shortest round-trip decimal
    return str(v)


def emit(rows: list[dict], fmt: str, destination) -> None:
    """Write rows as CSV (fixed column order, header always present) or JSON."""
    if not rows:
        raise ValueError("emit: no rows to write")
    if hasattr(destination, "write"):
        _emit_stream(rows, fmt, destination)
        return
    if destination == "-":
        _emit_stream(rows, fmt, sys.stdout)
        return
    with open(destination, "w", newline="") as fh:
        _emit_stream(rows, fmt, fh)


def _emit_stream(rows, fmt, stream):
    if fmt == "csv":
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow([_format_cell(row[c]) for c in COLUMNS])
    elif fmt == "json":
        json.dump([{c: row[c] for c in COLUMNS} for row in rows], stream, indent=1)
        stream.write("\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------------------
# engine cross-validation grid
# ---------------------------------------------------------------------------

def validate_grid(base_params: NetworkParams | None = None, trials: int = 100_000,
                  seed: int = 1, ms=GRID_M, sigma_dbs=GRID_SIGMA_DB, rates=GRID_RATES,
                  report=None) -> list[dict]:
    """Cross-validate the analytic engine against the simulator.

    For every (sector count, loop-interference variance, target rate, link)
    cell the analytic outage must match the Monte Carlo estimate within
    max(3 standard errors, 0.01).  Returns one record per cell with a
    ``passed`` flag; `report` (a callable) receives one line per cell.
    """
    base_params = base_params or NetworkParams()
    report = report or (lambda line: None)
    records = []
    for m in ms:
        for link in ("uplink", "downlink"):
            dl_cache = None
            for sigma_db in sigma_dbs:
                sigma_l2 = 0.0 if sigma_db is None else float(db_to_linear(sigma_db))
                params = dataclasses.replace(base_params, m_b=int(m), m_u=int(m),
                                             sigma_l2=sigma_l2)
                sim = SimConfig(trials=trials, seed=seed)
                # the downlink never sees the loop channel, so one simulation
                # and one analytic pass serve every sigma (byte-identical by
                # stream layout); the uplink is re-run per sigma
                if link == "downlink" and dl_cache is not None:
                    samples, analytic_by_rate = dl_cache
                else:
                    samples = montecarlo.sinr_samples(params, sim, link)
                    analytic_by_rate = {}
                    if link == "downlink":
                        dl_cache = (samples, analytic_by_rate)
                for rate in rates:
                    if rate not in analytic_by_rate:
                        query = OutageQuery(rate=rate, params=params, link=link)
                        analytic_by_rate[rate] = analytic.evaluate_outage(query)
                    ana = analytic_by_rate[rate]
                    mc = montecarlo.outage_from_samples(samples, rate)
                    gap = abs(ana.value - mc.value)
                    tol = max(3.0 * mc.uncertainty, 0.01)
                    passed = gap <= tol
                    records.append({
                        "m": int(m), "sigma_l2_db": sigma_db, "rate": rate, "link": link,
                        "analytic": ana.value, "montecarlo": mc.value,
                        "stderr": mc.uncertainty, "gap": gap, "tolerance": tol,
                        "passed": passed,
                    })
                    sig = "off" if sigma_db is None else f"{sigma_db:g} dB"
                    report(f"{'PASS' if passed else 'FAIL'} m={m} sigma_l2={sig} "
                           f"R={rate:g} {link}: analytic={ana.value:.4f} "
                           f"mc={mc.value:.4f}+-{mc.uncertainty:.4f} gap={gap:.4f} tol={tol:.4f}")
    return records


def _parse_grid_list(text, default, token_none="off"):
    if text is None:
        return default
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        out.append(None if tok == token_none else float(tok))
    return tuple(out)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def main(argv: list[str] | None = None) -> int:
    ns = parse_config(sys.argv[1:] if argv is None else list(argv))
    if ns.command == "validate":
        ms = tuple(int(v) for v in _parse_grid_list(ns.grid_m, GRID_M))
        sigmas = _parse_grid_list(ns.grid_sigma_db, GRID_SIGMA_DB)
        rates = _parse_grid_list(ns.grid_rates, GRID_RATES)
        records = validate_grid(ns.spec.params, trials=ns.trials, seed=ns.seed,
                                ms=ms, sigma_dbs=sigmas, rates=rates,
                                report=lambda line: print(line))
        failures = [r for r in records if not r["passed"]]
        print(f"{len(records) - len(failures)}/{len(records)} grid cells passed")
        return 1 if failures else 0
    rows = run_sweep(ns.spec)
    emit(rows, ns.format, ns.output)
    bad = sum(1 for r in rows if isinstance(r["value"], float) and math.isnan(r["value"]))
    if bad:
        print(f"fdcell: {bad} of {len(rows)} rows failed", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
