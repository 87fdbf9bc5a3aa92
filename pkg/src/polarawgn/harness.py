"""Experiment orchestration: simulations, sweeps, plots, and the CLI.

Subcommands: construct, select, simulate, sweep, analyze, demo. Every
stage writes deterministic artifacts (CSV with 17-significant-digit
reals, pinned JSON) so a sweep's outputs can be re-fed stage by stage.
Exit codes: 0 success, 1 usage error, 2 numeric failure, 3 invalid
configuration or file.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analysis, codec, construction, rng
from .channel import channel_capacity
from .constellation import build_constellation
from .quadrature import NumericFailure

TRIAL_CHUNK = construction.TRIAL_CHUNK


@dataclass
class SimReport:
    """Aggregated outcome of one simulation run."""

    spec_digest: str
    n: int
    power: float
    gamma: float
    rate: float
    trials: int
    errors: int
    err_rate: float
    err_stderr: float
    clamp_freq: float
    union_bound: float
    gap: float


def _sim_worker(spec_json, t0, t1):
    spec = codec.codespec_from_json(spec_json)
    errors, clamped, _ = codec.simulate_chunk(spec, t0, t1)
    return errors, clamped


def run_simulation(spec: codec.CodeSpec, trials: int, master_seed: int = None,
                   workers: int = 1, union: float = math.nan,
                   dump_path: str = None) -> SimReport:
    """Monte Carlo block-error simulation, byte-identical for any worker count."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if master_seed is not None and master_seed != spec.master_seed:
        spec = codec.CodeSpec(
            n=spec.n, m=spec.m, power=spec.power, gamma=spec.gamma,
            info_sets=spec.info_sets, constellation=spec.constellation,
            master_seed=master_seed, se_exponent=spec.se_exponent,
        )
    ranges = [(t0, min(t0 + TRIAL_CHUNK, trials)) for t0 in range(0, trials, TRIAL_CHUNK)]
    dump_fh = open(dump_path, "w") if dump_path else None
    try:
        if workers <= 1 or len(ranges) == 1 or dump_fh is not None:
            parts = []
            for t0, t1 in ranges:
                errors, clamped, records = codec.simulate_chunk(
                    spec, t0, t1, collect=dump_fh is not None
                )
                if dump_fh is not None:
                    for rec in records:
                        dump_fh.write(json.dumps(codec.record_to_jsonable(rec)) + "\n")
                parts.append((errors, clamped))
        else:
            spec_json = codec.codespec_to_json(spec)
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futs = [pool.submit(_sim_worker, spec_json, t0, t1) for t0, t1 in ranges]
                parts = [f.result() for f in futs]
    finally:
        if dump_fh is not None:
            dump_fh.close()
    errors = sum(p[0] for p in parts)
    clamped = sum(p[1] for p in parts)
    err_rate = errors / trials
    stderr = math.sqrt(err_rate * (1.0 - err_rate) / trials)
    rate = spec.rate
    return SimReport(
        spec_digest=codec.codespec_digest(spec), n=spec.n, power=spec.power,
        gamma=spec.gamma, rate=rate, trials=trials, errors=errors,
        err_rate=err_rate, err_stderr=stderr, clamp_freq=clamped / trials,
        union_bound=union, gap=channel_capacity(spec.power) - rate,
    )


_SIM_HEADER = ("spec_digest,n,P,gamma,rate,trials,errors,err_rate,err_stderr,"
               "clamp_freq,union_bound,gap")


def reports_to_csv(reports, path: str) -> None:
    lines = [_SIM_HEADER]
    for r in reports:
        lines.append(
            f"{r.spec_digest},{r.n},{r.power:.17g},{r.gamma:.17g},{r.rate:.17g},"
            f"{r.trials},{r.errors},{r.err_rate:.17g},{r.err_stderr:.17g},"
            f"{r.clamp_freq:.17g},{r.union_bound:.17g},{r.gap:.17g}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def plot_gaps(points, fits, path: str) -> None:
    """Log-log scatter of gaps versus block length with fitted lines, saved as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "polarawgn"
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ns = np.array([p.n for p in points], dtype=float)
    for which, color in (("mi", "tab:blue"), ("rate", "tab:orange")):
        gaps = np.array([
            p.capacity_gap_mi if which == "mi" else p.capacity_gap_rate for p in points
        ])
        if np.any(~np.isfinite(gaps)) or np.any(gaps <= 0):
            continue
        ax.loglog(ns, gaps, "o", color=color, label=f"{which} gap")
        fit = fits.get(which)
        if fit is not None:
            mu_hat, slope, _ = fit
            anchor = gaps[0] / ns[0] ** slope
            ax.loglog(ns, anchor * ns**slope, "--", color=color,
                      label=f"{which} fit: slope {slope:.3f}")
    ax.set_xlabel("block length n")
    ax.set_ylabel("gap to capacity (bits)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def run_sweep(n_list, power: float, gamma: float, construct_trials: int,
              trials: int, target_union: float, master_seed: int,
              workers: int, out_dir: str):
    """construct -> select -> simulate across block lengths, with artifacts.

    Selection is rate-targeted, calibrated so the selected reliability sum
    stays within ``target_union``. Writes per-n table and code files plus
    sim.csv, gaps.csv, fit.json, and gap_vs_n.svg into ``out_dir``.
    """
    os.makedirs(out_dir, exist_ok=True)
    reports = []
    sim_results = {}
    for n in n_list:
        try:
            c = build_constellation(n, power, gamma)
            seed_n = rng.derive_seed(master_seed, "construct-seed", n)
            table = construction.estimate_reliability(c, construct_trials, seed_n,
                                                      workers=workers)
            construction.table_to_csv(table, os.path.join(out_dir, f"table_n{n}.csv"))
            sets = construction.select_info_sets_union(table, target_union)
            union_plain, union_cons = construction.union_bound(table, sets)
            spec = codec.CodeSpec(
                n=n, m=c.m, power=power, gamma=gamma, info_sets=sets, constellation=c,
                master_seed=rng.derive_seed(master_seed, "code-seed", n),
            )
            with open(os.path.join(out_dir, f"code_n{n}.json"), "w") as fh:
                fh.write(codec.codespec_to_json(spec))
            report = run_simulation(spec, trials, workers=workers, union=union_plain)
        except (ValueError, NumericFailure, OSError) as exc:
            raise type(exc)(f"sweep stage failed at n={n}: {exc}") from exc
        reports.append(report)
        sim_results[n] = (report.rate, report.err_rate)
        print(f"n={n}: rate={report.rate:.4f} err={report.err_rate:.2e} "
              f"union={union_plain:.2e} (cons {union_cons:.2e}) "
              f"clamp={report.clamp_freq:.2e}")
    points = analysis.capacity_gap_table(n_list, power, gamma, sim_results)
    reports_to_csv(reports, os.path.join(out_dir, "sim.csv"))
    analysis.gaps_to_csv(points, power, gamma, os.path.join(out_dir, "gaps.csv"))
    fits = {}
    for which in ("mi", "rate"):
        try:
            fits[which] = analysis.scaling_fit(points, which)
        except ValueError:
            fits[which] = None
    with open(os.path.join(out_dir, "fit.json"), "w") as fh:
        json.dump(
            {
                which: None if fit is None else
                {"mu_hat": fit[0], "slope": fit[1], "r2": fit[2]}
                for which, fit in fits.items()
            },
            fh, indent=2, sort_keys=True,
        )
    plot_gaps(points, fits, os.path.join(out_dir, "gap_vs_n.svg"))
    for which, fit in fits.items():
        if fit is not None:
            print(f"{which}-gap fit: mu_hat={fit[0]:.3f} slope={fit[1]:.4f} r2={fit[2]:.4f}")
    return reports, points, fits


# ---------------------------------------------------------------------------
# CLI


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="polarawgn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON file of default flag values")
        p.add_argument("--workers", type=int, help="worker process hint (default 1)")
        p.add_argument("--seed", type=int, help="64-bit master seed (default 1)")

    p = sub.add_parser("construct", help="estimate bit-channel reliabilities")
    add_common(p)
    p.add_argument("--n", type=int, help="block length (power of two >= 4)")
    p.add_argument("--power", type=float, help="symbol power budget P")
    p.add_argument("--gamma", type=float, help="shaping knob in [0,1) (default 0)")
    p.add_argument("--trials", type=int, help="Monte Carlo trials (default 10000)")
    p.add_argument("--out", help="output reliability CSV path")

    p = sub.add_parser("select", help="choose information sets from a table")
    add_common(p)
    p.add_argument("--table", help="reliability CSV from construct")
    p.add_argument("--n", type=int)
    p.add_argument("--power", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--rule", choices=["rate", "union", "se", "md"],
                   help="selection rule (default union)")
    p.add_argument("--target-rate", type=float, help="bits per use for rule=rate")
    p.add_argument("--target-union", type=float,
                   help="reliability-sum budget for rule=union (default 1e-3)")
    p.add_argument("--md-gamma", type=float, help="gamma for rule=md")
    p.add_argument("--se-exponent", type=float, help="threshold exponent for rule=se")
    p.add_argument("--out", help="output code JSON path")

    p = sub.add_parser("simulate", help="run block-error trials for a code")
    add_common(p)
    p.add_argument("--code", help="code JSON from select")
    p.add_argument("--trials", type=int, help="number of trials (default 10000)")
    p.add_argument("--table", help="optional reliability CSV to report the union bound")
    p.add_argument("--dump", help="optional JSON-lines path for per-trial records")
    p.add_argument("--out", help="output simulation CSV path")

    p = sub.add_parser("sweep", help="construct/select/simulate over block lengths")
    add_common(p)
    p.add_argument("--n-list", help="comma-separated block lengths (default 64,256,1024)")
    p.add_argument("--power", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--construct-trials", type=int, help="construction trials (default 4000)")
    p.add_argument("--trials", type=int, help="simulation trials per n (default 10000)")
    p.add_argument("--target-union", type=float, help="selection budget (default 1e-3)")
    p.add_argument("--out-dir", help="artifact directory")

    p = sub.add_parser("analyze", help="capacity gaps and quantization bound checks")
    add_common(p)
    p.add_argument("--n-list", help="comma-separated block lengths")
    p.add_argument("--power", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--sim", help="optional sim.csv to merge rate/error columns")
    p.add_argument("--out", help="output gap CSV path")
    p.add_argument("--svg", help="optional SVG plot path")

    p = sub.add_parser("demo", help="small end-to-end run")
    add_common(p)
    p.add_argument("--out-dir", help="optional artifact directory")
    return parser


def _merge_config(args) -> dict:
    merged = vars(args).copy()
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValueError(f"cannot read config file: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ValueError("config file must hold a JSON object of flag values")
        for key, value in cfg.items():
            dest = key.replace("-", "_")
            if dest in merged and merged[dest] is None:
                merged[dest] = value
    return merged


def _get(merged, key, default=None, required=False):
    value = merged.get(key)
    if value is None:
        if required and default is None:
            raise ValueError(f"missing required option --{key.replace('_', '-')}")
        return default
    return value


def _parse_n_list(text) -> list:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    try:
        return [int(part) for part in str(text).split(",") if part.strip()]
    except ValueError as exc:
        raise ValueError(f"bad n list {text!r}: {exc}") from exc


def _require_power_of_two(n: int, minimum: int = 4) -> int:
    if n < minimum or (n & (n - 1)) != 0:
        raise ValueError(f"block length must be a power of two >= {minimum}, got {n}")
    return n


def _cmd_construct(merged) -> int:
    n = _require_power_of_two(int(_get(merged, "n", required=True)))
    power = float(_get(merged, "power", required=True))
    gamma = float(_get(merged, "gamma", 0.0))
    trials = int(_get(merged, "trials", 10000))
    seed = int(_get(merged, "seed", 1))
    workers = int(_get(merged, "workers", 1))
    out = _get(merged, "out", required=True)
    c = build_constellation(n, power, gamma)
    table = construction.estimate_reliability(c, trials, seed, workers=workers)
    construction.table_to_csv(table, out)
    print(f"wrote {out} ({table.m}x{table.n} bit-channels, {trials} trials)")
    return 0


def _cmd_select(merged) -> int:
    table = construction.table_from_csv(_get(merged, "table", required=True))
    n = _require_power_of_two(int(_get(merged, "n", table.n)))
    if n != table.n:
        raise ValueError(f"--n {n} does not match the table ({table.n})")
    power = float(_get(merged, "power", required=True))
    gamma = float(_get(merged, "gamma", 0.0))
    seed = int(_get(merged, "seed", 1))
    rule = _get(merged, "rule", "union")
    if rule == "rate":
        sets = construction.select_info_sets_rate(
            table, float(_get(merged, "target_rate", required=True)))
    elif rule == "union":
        sets = construction.select_info_sets_union(
            table, float(_get(merged, "target_union", 1e-3)))
    elif rule == "se":
        sets = construction.select_info_sets_se(
            table, float(_get(merged, "se_exponent", 4.0)))
    else:
        sets = construction.select_info_sets_md(
            table, float(_get(merged, "md_gamma", required=True)))
    c = build_constellation(n, power, gamma)
    spec = codec.CodeSpec(n=n, m=table.m, power=power, gamma=gamma, info_sets=sets,
                          constellation=c, master_seed=seed,
                          se_exponent=float(_get(merged, "se_exponent", 4.0)))
    out = _get(merged, "out", required=True)
    with open(out, "w") as fh:
        fh.write(codec.codespec_to_json(spec))
    union_plain, _ = construction.union_bound(table, sets)
    print(f"wrote {out} (rule {sets.rule}, rate {sets.rate:.4f}, "
          f"union bound {union_plain:.3e})")
    return 0


def _cmd_simulate(merged) -> int:
    with open(_get(merged, "code", required=True)) as fh:
        spec = codec.codespec_from_json(fh.read())
    trials = int(_get(merged, "trials", 10000))
    workers = int(_get(merged, "workers", 1))
    union = math.nan
    table_path = _get(merged, "table")
    if table_path:
        table = construction.table_from_csv(table_path)
        union, _ = construction.union_bound(table, spec.info_sets)
    report = run_simulation(spec, trials, workers=workers, union=union,
                            dump_path=_get(merged, "dump"))
    out = _get(merged, "out", required=True)
    reports_to_csv([report], out)
    print(f"wrote {out}: err={report.err_rate:.3e} +/- {report.err_stderr:.1e} "
          f"clamp={report.clamp_freq:.2e}")
    return 0


def _cmd_sweep(merged) -> int:
    n_list = [_require_power_of_two(v) for v in
              _parse_n_list(_get(merged, "n_list", "64,256,1024"))]
    run_sweep(
        n_list,
        power=float(_get(merged, "power", 1.0)),
        gamma=float(_get(merged, "gamma", 0.0)),
        construct_trials=int(_get(merged, "construct_trials", 4000)),
        trials=int(_get(merged, "trials", 10000)),
        target_union=float(_get(merged, "target_union", 1e-3)),
        master_seed=int(_get(merged, "seed", 1)),
        workers=int(_get(merged, "workers", 1)),
        out_dir=_get(merged, "out_dir", required=True),
    )
    return 0


def _read_sim_results(path: str) -> dict:
    out = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != _SIM_HEADER:
            raise ValueError(f"unexpected simulation CSV header: {header!r}")
        for line in fh:
            if not line.strip():
                continue
            f = line.strip().split(",")
            out[int(f[1])] = (float(f[4]), float(f[7]))
    return out


def _cmd_analyze(merged) -> int:
    n_list = [_require_power_of_two(v) for v in
              _parse_n_list(_get(merged, "n_list", required=True))]
    power = float(_get(merged, "power", 1.0))
    gamma = float(_get(merged, "gamma", 0.0))
    sim_path = _get(merged, "sim")
    sim_results = _read_sim_results(sim_path) if sim_path else None
    points = analysis.capacity_gap_table(n_list, power, gamma, sim_results)
    out = _get(merged, "out", required=True)
    analysis.gaps_to_csv(points, power, gamma, out)
    fits = {}
    for which in ("mi", "rate"):
        try:
            fits[which] = analysis.scaling_fit(points, which)
            mu_hat, slope, r2 = fits[which]
            print(f"{which}-gap fit: mu_hat={mu_hat:.3f} slope={slope:.4f} r2={r2:.4f}")
        except ValueError:
            fits[which] = None
    svg = _get(merged, "svg")
    if svg:
        plot_gaps(points, fits, svg)
    print(f"wrote {out}")
    return 0


def _cmd_demo(merged) -> int:
    import tempfile

    out_dir = _get(merged, "out_dir")
    tmp = None
    if out_dir is None:
        tmp = tempfile.TemporaryDirectory(prefix="polarawgn-demo-")
        out_dir = tmp.name
    try:
        print("small sweep at n in {16, 64}, P=1, gamma=0 ...")
        run_sweep([16, 64], power=1.0, gamma=0.0, construct_trials=1500, trials=2000,
                  target_union=1e-2, master_seed=int(_get(merged, "seed", 1)),
                  workers=int(_get(merged, "workers", 1)), out_dir=out_dir)
        print(f"artifacts in {out_dir}")
    finally:
        if tmp is not None:
            tmp.cleanup()
    return 0


_COMMANDS = {
    "construct": _cmd_construct,
    "select": _cmd_select,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "analyze": _cmd_analyze,
    "demo": _cmd_demo,
}


def cli_main(argv) -> int:
    """Parse and run; returns 0 ok, 1 usage, 2 numeric failure, 3 bad config/file."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        merged = _merge_config(args)
        return _COMMANDS[args.command](merged)
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))
