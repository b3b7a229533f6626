"""
Command-line front end.

    heatpath simulate|besov|orlicz|localtime|levelset|lnd|verify [options]

A run is described by one JSON config document; command-line flags
override config fields, which override the per-command defaults.  Every
command writes its tables plus ``manifest_<command>.json`` into ``--out``.
Exit codes: 0 ok, 1 verification failure, 2 config error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import copy
import datetime as _dt
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import besov, localtime, sampler, tables, verify
from .errors import ConfigError, HeatpathError, NumericalError
from .kernels import Modulus, SpaceSection, SpaceTime, TimeSection
from .rng import U64, SeedSpec

COMMANDS = ("simulate", "besov", "orlicz", "localtime", "levelset", "lnd", "verify")

SECTION_FIELDS = {
    "time": {"x": 0.0, "horizon": 1.0},
    "space": {"t": 1.0, "a": 0.0, "b": 1.0},
    "spacetime": {"t0": 0.0, "t1": 1.0, "x0": 0.0, "x1": 1.0},
}
SECTION_TYPES = {"time": TimeSection, "space": SpaceSection, "spacetime": SpaceTime}

ANALYSIS_KEYS = {
    "alpha", "lambda", "p", "floor_factor", "orlicz_alpha", "orlicz_p_grid",
    "localtime", "levelset", "lnd", "verify",
}
LOCALTIME_KEYS = {"xi", "bins", "method", "columns", "orders", "lag_levels", "bin_width_factor", "holder_levels"}
LEVELSET_KEYS = {"xi", "levels", "min_cells"}
LND_KEYS = {"resolution_j", "max_span", "radii", "floor"}

BASE_DEFAULTS = {
    "section": {"kind": "time"},
    "resolution_j": 10,
    "seeds": {"base": 0, "count": 1},
    "analysis": {},
    "out": "heatpath-out",
    "format": "csv",
}
COMMAND_DEFAULTS = {
    "simulate": {},
    "besov": {"resolution_j": 12, "seeds": {"count": 50}},
    "orlicz": {"resolution_j": 12, "seeds": {"count": 50}},
    "localtime": {"resolution_j": 12, "seeds": {"count": 200}},
    "levelset": {"resolution_j": 12, "seeds": {"count": 20}},
    "lnd": {"resolution_j": 8},
    "verify": {},
}


# ------------------------------------------------------------------ config


def _merge(base, extra):
    out = copy.deepcopy(base)
    for k, v in (extra or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _reject_unknown(block, allowed, where):
    unknown = set(block) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def load_config(path):
    """Read a config document, or the config echoed in a run manifest."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    if "manifest_version" in doc:
        doc = doc.get("config", {})
    return doc


def resolve_config(command, file_cfg=None, flags=None):
    """Defaults < config file < flags; validated before anything runs."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    file_cfg = file_cfg or {}
    _reject_unknown(file_cfg, BASE_DEFAULTS, "config")
    cfg = _merge(_merge(BASE_DEFAULTS, COMMAND_DEFAULTS[command]), file_cfg)
    flags = flags or {}
    if flags.get("section") and flags["section"] != cfg["section"].get("kind"):
        cfg["section"] = {"kind": flags["section"]}
    for key, dest in (("seed", ("seeds", "base")), ("replicates", ("seeds", "count"))):
        if flags.get(key) is not None:
            cfg[dest[0]][dest[1]] = flags[key]
    for key in ("resolution_j", "out", "format"):
        if flags.get(key) is not None:
            cfg[key] = flags[key]
    validate(command, cfg)
    return cfg


def _section_defaults(kind):
    if kind not in SECTION_FIELDS:
        raise ConfigError(f"unknown section kind {kind!r}; expected one of {sorted(SECTION_FIELDS)}")
    return SECTION_FIELDS[kind]


def make_section(block):
    kind = block.get("kind", "time")
    fields = _section_defaults(kind)
    _reject_unknown(block, set(fields) | {"kind"}, "section")
    params = {k: float(block.get(k, v)) for k, v in fields.items()}
    try:
        return SECTION_TYPES[kind](**params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def default_alpha(section):
    return 0.25 if isinstance(section, TimeSection) else 0.5


def validate(command, cfg):
    section = make_section(cfg["section"])
    cfg["section"] = {"kind": section.kind, **{k: getattr(section, k) for k in SECTION_FIELDS[section.kind]}}
    _reject_unknown(cfg["seeds"], {"base", "count"}, "seeds")
    base, count = cfg["seeds"]["base"], cfg["seeds"]["count"]
    if not isinstance(base, int) or not 0 <= base <= U64:
        raise ConfigError("seeds.base must be an unsigned 64-bit integer")
    if not isinstance(count, int) or count < 1:
        raise ConfigError("seeds.count must be a positive integer")
    J = cfg["resolution_j"]
    if not isinstance(J, int):
        raise ConfigError("resolution_j must be an integer")
    if command not in ("verify", "lnd"):
        sampler.GridSpec(section, J)  # enforces J >= 1 and the backend cap
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    an = cfg["analysis"]
    _reject_unknown(an, ANALYSIS_KEYS, "analysis")
    one_d = command in ("besov", "orlicz", "localtime", "levelset")
    if one_d and isinstance(section, SpaceTime):
        raise ConfigError(f"{command} needs a time or space section")
    if command == "lnd" and isinstance(section, SpaceTime):
        raise ConfigError("lnd needs a time or space section")
    if command == "besov":
        alpha = an.get("alpha", default_alpha(section))
        lam = an.get("lambda", 0.0)
        try:
            Modulus(alpha, lam)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        for p in an.get("p", [6.0]):
            if p <= 1 or alpha * p <= 1:
                raise ConfigError(f"need p > 1 and alpha * p > 1 (alpha={alpha}, p={p})")
    if command == "orlicz":
        alpha = an.get("orlicz_alpha", default_alpha(section))
        if not 0 < alpha < 1:
            raise ConfigError("orlicz_alpha must lie in (0, 1)")
    if command == "localtime":
        _reject_unknown(an.get("localtime", {}), LOCALTIME_KEYS, "analysis.localtime")
        lt = an.get("localtime", {})
        for n in lt.get("orders", [2]):
            if n < 2 or n % 2:
                raise ConfigError("moment orders must be even and >= 2")
        if count < localtime.MIN_REPLICATES:
            raise ConfigError(f"localtime needs at least {localtime.MIN_REPLICATES} replicates for moment scaling")
    if command == "levelset":
        _reject_unknown(an.get("levelset", {}), LEVELSET_KEYS, "analysis.levelset")
    if command == "lnd":
        _reject_unknown(an.get("lnd", {}), LND_KEYS, "analysis.lnd")
    if command == "verify":
        suite = an.get("verify")
        if suite is not None:
            _reject_unknown(suite, verify.CHECKS, "analysis.verify")
    return cfg


# ----------------------------------------------------------------- helpers


def threads() -> int:
    raw = os.environ.get("HEATPATH_THREADS", "").strip()
    n = int(raw) if raw else 0
    return n if n > 0 else (os.cpu_count() or 1)


def pool_map(fn, items):
    """Map in a thread pool; results come back in input order."""
    items = list(items)
    n = min(threads(), max(1, len(items)))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _sample(cfg):
    section = make_section(cfg["section"])
    grid = sampler.GridSpec(section, cfg["resolution_j"])
    seed = SeedSpec(cfg["seeds"]["base"])
    factor = sampler.cholesky_factor(sampler.build_covariance(grid))
    n = cfg["seeds"]["count"]
    # per-replicate streams, so splitting the work does not change any value
    blocks = [range(i, min(n, i + 16)) for i in range(0, n, 16)]
    parts = pool_map(lambda r: sampler.sample_from_factor(factor, seed.replicate(r.start), len(r)), blocks)
    values = np.vstack(parts)
    return [sampler.SamplePath(grid, values[i], seed.replicate(i)) for i in range(n)]


def _meta(cfg, **extra):
    sec = cfg["section"]
    meta = {f"section.{k}": v for k, v in sec.items()}
    meta.update({"resolution_j": cfg["resolution_j"], "seed_base": cfg["seeds"]["base"]})
    meta.update(extra)
    return meta


def _quantiles(x, qs=(0.05, 0.5, 0.95)):
    x = np.asarray(x, dtype=float)
    return [float(np.quantile(x, q)) for q in qs]


class Run:
    def __init__(self, cfg):
        self.cfg = cfg
        self.out = Path(cfg["out"])
        try:
            self.out.mkdir(parents=True, exist_ok=True)
            probe = self.out / ".write-test"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            raise ConfigError(f"output directory {self.out} is not writable: {exc}") from exc
        self.outputs = []

    def table(self, name, columns, rows, **meta):
        p = tables.write_table(self.out / name, columns, rows, _meta(self.cfg, **meta), self.cfg["format"])
        self.outputs.append(p)
        return p

    def json(self, name, doc):
        p = self.out / f"{name}.json"
        p.write_text(tables.dumps(doc))
        self.outputs.append(p)
        return p


# ---------------------------------------------------------------- commands


def cmd_simulate(cfg, run: Run):
    paths = _sample(cfg)
    for p in paths:
        if p.values.size != p.grid.n_points:
            raise NumericalError("sample length does not match the grid")
        coords = p.grid.coordinates
        if coords.ndim == 1:
            cols = ["index", "coordinate", "value"]
            rows = [(i, c, v) for i, (c, v) in enumerate(zip(coords, p.values))]
        else:
            cols = ["index", "t", "x", "value"]
            rows = [(i, c[0], c[1], v) for i, (c, v) in enumerate(zip(coords, p.values))]
        run.table(f"path_{p.seed.replicate_index:05d}", cols, rows, replicate_index=p.seed.replicate_index)
    return 0


def cmd_besov(cfg, run: Run):
    section = make_section(cfg["section"])
    an = cfg["analysis"]
    m = Modulus(an.get("alpha", default_alpha(section)), an.get("lambda", 0.0))
    ps = [float(p) for p in an.get("p", [6.0])]
    floor = an.get("floor_factor", besov.LITTLE_SPACE_FLOOR)
    paths = _sample(cfg)

    def one(path):
        c = besov.schauder_coefficients(path)
        return [besov.regularity_report(c, m, p, floor) for p in ps]

    reports = pool_map(one, paths)
    rows, per_seed = [], []
    for path, reps in zip(paths, reports):
        i = path.seed.replicate_index
        for r in reps:
            per_seed.append({"replicate_index": i, **r.as_dict()})
            rows.extend((i, r.p, int(j), s) for j, s in zip(r.levels, r.stats))
    run.table("besov_levels", ["replicate_index", "p", "j", "s_j"], rows, alpha=m.alpha, **{"lambda": m.lam})
    aggregate = []
    for k, p in enumerate(ps):
        reps = [r[k] for r in reports]
        stats = np.array([r.stats for r in reps])
        aggregate.append({
            "p": p,
            "n_seeds": len(reps),
            "in_big_space_rate": float(np.mean([r.in_big_space for r in reps])),
            "little_space_violation_rate": float(np.mean([r.little_space_violation for r in reps])),
            "levels": [int(j) for j in reps[0].levels],
            "s_j_quantiles": {"q05": _quantiles_cols(stats, 0.05), "q50": _quantiles_cols(stats, 0.5),
                              "q95": _quantiles_cols(stats, 0.95)},
            "norm_quantiles": _quantiles([r.norm for r in reps]),
        })
    run.json("besov_report", {"modulus": {"alpha": m.alpha, "lambda": m.lam}, "per_seed": per_seed,
                              "aggregate": aggregate})
    return 0


def _quantiles_cols(a, q):
    return [float(v) for v in np.quantile(a, q, axis=0)]


def cmd_orlicz(cfg, run: Run):
    section = make_section(cfg["section"])
    an = cfg["analysis"]
    alpha = an.get("orlicz_alpha", default_alpha(section))
    grid = tuple(float(p) for p in an.get("orlicz_p_grid", besov.ORLICZ_P_GRID))
    paths = _sample(cfg)

    def one(path):
        c = besov.schauder_coefficients(path)
        table = besov.orlicz_level_stats(c, alpha, grid)
        norm, arg = besov.orlicz_sequence_norm(c, alpha, grid)
        sup_j = table.max(axis=1)
        diag = besov.little_space_diagnostic(sup_j)
        return table, norm, arg, diag

    results = pool_map(one, paths)
    rows, per_seed = [], []
    for path, (table, norm, arg, diag) in zip(paths, results):
        i = path.seed.replicate_index
        for j in range(table.shape[0]):
            rows.extend((i, j, p, table[j, k]) for k, p in enumerate(grid))
        per_seed.append({"replicate_index": i, "norm": norm, "argmax_p": arg[0], "argmax_j": arg[1],
                         "top_half_slope": diag.slope, "finite": bool(np.isfinite(norm)),
                         "plateau": besov.is_plateau(diag.slope)})
    run.table("orlicz_levels", ["replicate_index", "j", "p", "stat"], rows, alpha=alpha)
    run.json("orlicz_report", {
        "alpha": alpha, "p_grid": list(grid), "per_seed": per_seed,
        "aggregate": {"n_seeds": len(per_seed),
                      "finite_rate": float(np.mean([s["finite"] for s in per_seed])),
                      "plateau_rate": float(np.mean([s["plateau"] for s in per_seed])),
                      "norm_quantiles": _quantiles([s["norm"] for s in per_seed])},
    })
    return 0


def _dimension_seed(cfg, replicate_index):
    return np.random.default_rng([cfg["seeds"]["base"], replicate_index, 0x4C5E7])


def _dimension(cfg, path, opts):
    """Box dimension of the level set at ``xi`` (``"random"``: ``path(t0)``, ``t0`` uniform)."""
    xi = opts.get("xi", "random")
    if xi == "random":
        t0 = int(_dimension_seed(cfg, path.seed.replicate_index).integers(0, path.values.size))
        xi = float(path.values[t0])
    ls = localtime.level_set(path, float(xi))
    J = path.grid.resolution_j
    lo, hi = opts.get("levels") or localtime.default_box_levels(J)
    try:
        est = localtime.box_dimension(ls, np.arange(lo, hi + 1), opts.get("min_cells", localtime.MIN_LEVEL_CELLS))
    except ConfigError as exc:
        return ls, None, str(exc)
    return ls, est, None


def _dimension_doc(cfg, paths, opts):
    per_seed, dims, excluded = [], [], 0
    for path in paths:
        ls, est, err = _dimension(cfg, path, opts)
        entry = {"replicate_index": path.seed.replicate_index, "level": ls.level, "n_cells": len(ls)}
        if est is None:
            excluded += 1
            entry["excluded"] = err
        else:
            dims.append(est.dim)
            entry.update({"dim": est.dim, "stderr": est.stderr, "scales": est.scales, "counts": est.counts})
        per_seed.append(entry)
    return {"per_seed": per_seed, "aggregate": {
        "n_used": len(dims), "n_excluded_low_occupancy": excluded,
        "median_dim": float(np.median(dims)) if dims else None}}


def cmd_localtime(cfg, run: Run):
    section = make_section(cfg["section"])
    lt = cfg["analysis"].get("localtime", {})
    J = cfg["resolution_j"]
    paths = _sample(cfg)
    dt = float(paths[0].grid.coordinates[1] - paths[0].grid.coordinates[0])
    xi = lt.get("xi", "anchor")
    factor = lt.get("bin_width_factor", localtime.BIN_WIDTH_FACTOR)

    # occupation field of the first replicate
    n_cols = min(lt.get("columns", 64), 2 ** J)
    stops = np.arange(0, 2 ** J + 1, 2 ** J // n_cols)
    field = localtime.occupation_histogram(paths[0], lt.get("bins"), stops, lt.get("method", "left"))
    cols = ["xi"] + [f"L@{tables.fmt(float(t))}" for t in field.time_grid]
    rows = [[x] + list(r) for x, r in zip(field.xi_grid, field.values)]
    run.table("localtime_field", cols, rows, dxi=field.dxi, method=field.method,
              replicate_index=paths[0].seed.replicate_index)

    # moment scaling, anchored at the start of the section
    def series(p):
        level = float(p.values[0]) if xi == "anchor" else float(xi)
        width = factor * float(np.median(np.abs(np.diff(p.values))))
        return localtime.local_time_series(p, level, width)

    L = np.array(pool_map(series, paths))
    span = float(paths[0].grid.coordinates[-1] - paths[0].grid.coordinates[0])
    lag_levels = lt.get("lag_levels", [9, 4])
    lags = span * 2.0 ** -np.arange(lag_levels[0], lag_levels[1] - 1, -1)
    target_rate = 0.75 if isinstance(section, TimeSection) else 0.5
    fits, rows = [], []
    for n in lt.get("orders", [2]):
        ms = localtime.moment_scaling(L, dt, lags, order=n, seed=cfg["seeds"]["base"])
        fits.append({"order": n, "slope": ms.slope, "stderr": ms.stderr, "target": n * target_rate,
                     "n_replicates": ms.n_replicates})
        rows.extend((n, h, mval) for h, mval in zip(ms.lags, ms.moments))
    run.table("localtime_moments", ["order", "lag", "moment"], rows,
              **{f"slope_n{f['order']}": f["slope"] for f in fits},
              **{f"stderr_n{f['order']}": f["stderr"] for f in fits})

    # Hölder exponents of the raw path and of L(0, .)
    holder = []
    for p in paths:
        raw = localtime.holder_exponent(p.values)[0]
        try:
            lt_alpha = localtime.holder_exponent(localtime.local_time_series(p, 0.0), nonzero=True)[0]
        except ValueError:
            lt_alpha = None
        holder.append({"replicate_index": p.seed.replicate_index, "raw": raw, "local_time": lt_alpha})
    lt_vals = [h["local_time"] for h in holder if h["local_time"] is not None]
    run.json("localtime_report", {
        "moment_fits": fits,
        "holder": {"per_seed": holder, "median_raw": float(np.median([h["raw"] for h in holder])),
                   "median_local_time": float(np.median(lt_vals)) if lt_vals else None,
                   "n_excluded_no_visit": len(holder) - len(lt_vals)},
        "dimension": _dimension_doc(cfg, paths, cfg["analysis"].get("levelset", {})),
    })
    return 0


def cmd_levelset(cfg, run: Run):
    opts = cfg["analysis"].get("levelset", {})
    paths = _sample(cfg)
    rows = []
    for p in paths:
        ls, _, _ = _dimension(cfg, p, opts)
        rows.extend((p.seed.replicate_index, ls.level, int(c)) for c in ls.cells)
    run.table("levelset_cells", ["replicate_index", "level", "cell"], rows)
    run.json("levelset_report", _dimension_doc(cfg, paths, opts))
    return 0


def cmd_lnd(cfg, run: Run):
    section = make_section(cfg["section"])
    opts = cfg["analysis"].get("lnd", {})
    J = opts.get("resolution_j", cfg["resolution_j"])
    doc = {}
    if isinstance(section, TimeSection):
        ratio, where = sampler.lnd_ratio_scan(J, opts.get("max_span", 0.125), section)
        floor = opts.get("floor", 0.05)
        doc["lnd"] = {"min_ratio": ratio, "argmin_rst": list(where), "floor": floor, "pass": ratio >= floor}
    else:
        radii = opts.get("radii")
        radii, mins, K = sampler.slnd_scan(J, section, radii)
        run.table("slnd", ["radius", "min_conditional_variance", "ratio"],
                  [(r, v, v / r) for r, v in zip(radii, mins)], K=K)
        doc["slnd"] = {"K": K, "pass": K > 0}
    run.json("lnd_report", doc)
    return 0


def cmd_verify(cfg, run: Run, only=None, tolerance_scale=1.0):
    suite = cfg["analysis"].get("verify")
    reports = verify.run_suite(suite, only=only, tolerance_scale=tolerance_scale)
    cols = ["quantity", "oracle", "closed_form", "discrepancy", "tolerance", "passed", "kind"]
    run.table("verify_report", cols, [[getattr(r, c) for c in cols] for r in reports])
    n_fail = sum(not r.passed for r in reports)
    run.json("verify_summary", {"n_checks": len(reports), "n_failed": n_fail,
                                "failed": [r.quantity for r in reports if not r.passed]})
    return 1 if n_fail else 0


HANDLERS = {
    "simulate": cmd_simulate,
    "besov": cmd_besov,
    "orlicz": cmd_orlicz,
    "localtime": cmd_localtime,
    "levelset": cmd_levelset,
    "lnd": cmd_lnd,
    "verify": cmd_verify,
}


# -------------------------------------------------------------------- main


def build_parser():
    parser = argparse.ArgumentParser(prog="heatpath", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path)
        p.add_argument("--seed", type=int)
        p.add_argument("--replicates", type=int)
        p.add_argument("--resolution", type=int, dest="resolution_j")
        p.add_argument("--section", choices=sorted(SECTION_FIELDS))
        p.add_argument("--out")
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--timestamps", action="store_true",
                       help="record wall-clock times in the manifest (breaks byte-identical reruns)")
        if name == "verify":
            p.add_argument("--only", action="append")
            p.add_argument("--tolerance-scale", type=float, default=1.0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_cfg = load_config(args.config) if args.config else {}
        cfg = resolve_config(args.command, file_cfg, vars(args))
        run = Run(cfg)
        started = _dt.datetime.now(_dt.timezone.utc).isoformat()
        if args.command == "verify":
            code = cmd_verify(cfg, run, args.only, args.tolerance_scale)
        else:
            code = HANDLERS[args.command](cfg, run)
        stamps = None
        if args.timestamps:
            stamps = {"started": started, "finished": _dt.datetime.now(_dt.timezone.utc).isoformat()}
        tables.write_manifest(run.out, args.command, cfg, run.outputs, stamps)
    except ConfigError as exc:
        print(f"heatpath: config error: {exc}", file=sys.stderr)
        return exc.exit_code
    except NumericalError as exc:
        print(f"heatpath: numerical failure: {exc}", file=sys.stderr)
        return exc.exit_code
    except HeatpathError as exc:
        print(f"heatpath: {exc}", file=sys.stderr)
        return exc.exit_code
    status = "ok" if code == 0 else "verification failed"
    print(f"heatpath {args.command}: {status}; outputs in {run.out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
