"""``resonlab`` command line tool.

Every command reads a run configuration (see :mod:`resonlab.config`),
writes its CSV files and a ``manifest.json`` into the output directory and
exits with 0 on success, 1 on a named computational error and 2 on a
usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, svg
from .birman import (counting_function, det_scan, eigenvalue_scan, locate_zeros,
                     write_detscan_csv, write_resonances_csv)
from .config import ConfigError, load_config
from .contour import Region
from .errors import ResonlabError, SchemaError
from .freeres import OperatorCache
from .grids import default_grid
from .modes import mode_block_matrix, mode_norm_estimate, triangularity_defect, write_mode_norms_csv
from .oracles import smatrix_det_1d, square_well_bound_states, square_well_roots
from .potentials import Radial, SeparableAngular, SquareWell
from .scattering import (homotopy_scan, scattering_data, scattering_phase, sdet_farfield,
                         sdet_ratio, write_homotopy_csv, write_phase_csv)
from .wavesim import (decay_rates, run_fdtd_1d, run_mode_wave_3d, write_decay_csv,
                      write_verdict_json)

COMMANDS = ("det-scan", "resonances", "phase", "homotopy", "mode-bounds", "wave", "validate")


@dataclass
class Context:
    out: Path
    threads: int = 1
    use_cache: bool = True
    seed: int = 0
    outputs: list = field(default_factory=list)
    cache: OperatorCache | None = None
    pool: ThreadPoolExecutor | None = None

    @property
    def mapper(self):
        return self.pool.map if self.pool is not None else map

    def path(self, name):
        p = self.out / name
        self.outputs.append(p)
        return p


def _cache_root():
    env = os.environ.get("RESONLAB_CACHE_DIR")
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "resonlab"


def _grid(cfg):
    return default_grid(cfg.spec, cfg.grid) if cfg.spec is not None else None


def _spec(cfg):
    if cfg.spec is None:
        raise ConfigError("potential", f"{cfg.path} names no potential document")
    return cfg.spec


def _region(cfg):
    r = cfg.need("region")
    return Region(r["re"][0], r["re"][1], r["im"][0], r["im"][1], r["sheet"])


def _zero_kw(cfg):
    kw = dict(cfg.zeros)
    tol = kw.pop("tol", 1e-6)
    return tol, kw


def _phase_lambdas(cfg):
    ph = cfg.need("phase")
    return np.linspace(float(ph.get("lambda_min", 0.5)), float(ph.get("lambda_max", 10.0)),
                       int(ph.get("n", 40)))


def _circle(n):
    return [complex(math.cos(2 * math.pi * k / n), math.sin(2 * math.pi * k / n)) for k in range(n)]


# --------------------------------------------------------------------------
# commands

def cmd_det_scan(cfg, ctx):
    spec = _spec(cfg)
    r = cfg.need("region")
    re_v = np.linspace(r["re"][0], r["re"][1], r["n_re"])
    im_v = np.linspace(r["im"][0], r["im"][1], r["n_im"])
    rows = det_scan(spec, re_v, im_v, _grid(cfg), r["sheet"], cfg.method, ctx.mapper, ctx.cache)
    write_detscan_csv(ctx.path("detscan.csv"), rows)
    mag = np.array([abs(d) for _, _, d in rows]).reshape(len(im_v), len(re_v))
    with np.errstate(divide="ignore"):
        svg.heatmap(ctx.path("detscan.svg"), re_v, im_v, np.log10(mag),
                    "log10 |det(I + K(λ))|", label="log10")
    dev = max(abs(d - 1) for _, _, d in rows)
    print(f"det-scan: {len(rows)} points, max |det - 1| = {dev:.3e}, min |det| = {mag.min():.3e}")
    return rows


def cmd_resonances(cfg, ctx):
    spec = _spec(cfg)
    tol, kw = _zero_kw(cfg)
    rs = locate_zeros(spec, _region(cfg), tol=tol, grid=_grid(cfg), method=cfg.method,
                      cache=ctx.cache, **kw)
    write_resonances_csv(ctx.path("resonances.csv"), rs)
    print(f"resonances: {len(rs.entries)} zeros ({sum(e.multiplicity for e in rs.entries)} "
          f"with multiplicity), {rs.tolerances['evaluations']} determinant evaluations")
    for e in sorted(rs.entries, key=lambda e: (e.lam.real, e.lam.imag)):
        print(f"  {e.lam.real: .10f} {e.lam.imag:+.10f}i  sheet {e.sheet}  mult {e.multiplicity}")
    return rs


def cmd_phase(cfg, ctx):
    spec = _spec(cfg)
    grid = _grid(cfg)
    lams = _phase_lambdas(cfg)
    sd = scattering_data(spec, lams, grid, cfg.method, ctx.mapper)
    sd = scattering_phase(sd, refine=lambda l: sdet_ratio(spec, l, grid, cfg.method))
    write_phase_csv(ctx.path("phase.csv"), sd)
    svg.line_plot(ctx.path("phase.svg"), [("σ(λ)", sd.lambda_grid, sd.sigma)],
                  "scattering phase", "λ", "σ")
    print(f"phase: {len(sd.lambda_grid)} points, max |s - 1| = {np.max(np.abs(sd.s_values - 1)):.3e}, "
          f"max |σ| = {np.max(np.abs(sd.sigma)):.3e}")
    ff = {}
    ph = cfg.phase
    if spec.dimension == 3 and ph.get("far_field"):
        for lam in ph["far_field"]:
            d = sdet_farfield(spec, float(lam), int(ph.get("L", 8)), grid,
                              float(ph.get("far_field_tol", 1e-3)))
            ratio = sdet_ratio(spec, float(lam), grid, cfg.method)
            ff[float(lam)] = (d, ratio)
            print(f"  far field λ={lam}: det S = {d:.12g}, ratio = {ratio:.12g}, "
                  f"difference {abs(d - ratio):.3e}")
    return sd, ff


def cmd_homotopy(cfg, ctx):
    spec = _spec(cfg)
    h = cfg.need("homotopy")
    lam = float(h.get("lambda", 2.0))
    zs = [0j] + _circle(int(h.get("n_points", 32)))
    hs = homotopy_scan(spec, lam, zs, _grid(cfg), cfg.method, ctx.mapper)
    write_homotopy_csv(ctx.path("homotopy.csv"), zs, hs)
    circle = np.array(hs[1:])
    var = float(np.max(np.abs(circle - circle[0])))
    print(f"homotopy: λ = {lam}, variation on the circle {var:.3e}, |h(0) - 1| = {abs(hs[0] - 1):.3e}")
    return zs, hs


def cmd_mode_bounds(cfg, ctx):
    m = cfg.need("modes")
    lam = complex(float(m.get("lambda_re", 0.0)), float(m.get("lambda_im", 1.0)))
    js = [int(j) for j in m.get("j", [8, 11, 16, 23, 32, 45, 64])]
    dim = int(m.get("dimension", cfg.spec.dimension if cfg.spec is not None else 3))
    kw = {"cutoff": float(m.get("cutoff", 1.0)), "dimension": dim,
          "method": m.get("method", "radial")}
    if "n_radial" in m:
        kw["n_radial"] = int(m["n_radial"])
    norms = list(ctx.mapper(lambda j: mode_norm_estimate(lam, j, **kw), js))
    rows = [(j, n, lam) for j, n in zip(js, norms)]
    write_mode_norms_csv(ctx.path("mode_norms.csv"), rows)
    slope = float(np.polyfit(np.log(np.abs(js)), np.log(norms), 1)[0]) if len(js) > 1 else float("nan")
    svg.line_plot(ctx.path("mode_norms.svg"), [("norm", np.log10(np.abs(js)), np.log10(norms))],
                  "single-mode free resolvent norms", "log10 |j|", "log10 norm")
    print(f"mode-bounds: λ = {lam}, log-log slope {slope:.4f}, "
          f"j^2 norm in [{min(j * j * n for j, n in zip(js, norms)):.4f}, "
          f"{max(j * j * n for j, n in zip(js, norms)):.4f}]")
    return js, norms, slope


def cmd_wave(cfg, ctx):
    spec = _spec(cfg)
    w = cfg.need("wave")
    T = float(w.get("T", 8.0))
    common = dict(h=float(w.get("h", 0.025)), cfl=float(w.get("cfl", 0.5)),
                  record_every=int(w.get("record_every", 1)))
    if "half_width" in w:
        common["half_width"] = float(w["half_width"])
    if spec.dimension == 1:
        wf = run_fdtd_1d(spec, T, y=float(w.get("y", 0.0)), sigma=float(w.get("sigma", 0.05)),
                         measure_radius=float(w.get("measure_radius", spec.support_radius)), **common)
    elif spec.dimension == 3:
        src = w.get("source", [0.5, 0.1])
        wf = run_mode_wave_3d(spec, T, j0=int(w.get("j0", 0)), source=(float(src[0]), float(src[1])),
                              sigma=float(w.get("sigma", 0.08)), J=int(w.get("J", 12)),
                              measure_radius=float(w.get("measure_radius", 1.0)), **common)
    else:
        raise ConfigError("potential", "the wave command supports dimensions 1 and 3")
    windows = [tuple(x) for x in w.get("windows", [[1, 3], [3, 5], [5, 7]])]
    rep = decay_rates(wf.times, wf.local_energy, windows, float(w.get("margin", 0.1)),
                      float(w.get("floor", 1e-14)))
    write_decay_csv(ctx.path("decay.csv"), wf, per_mode=bool(wf.modes))
    write_verdict_json(ctx.path("verdict.json"), rep,
                       {"dt": wf.dt, "h": wf.h, "cfl": wf.cfl, "T": wf.time})
    with np.errstate(divide="ignore"):
        svg.line_plot(ctx.path("decay.svg"), [("‖χu‖", wf.times, np.log10(wf.local_energy))],
                      "local energy", "t", "log10 ‖χu(t)‖")
    print(f"wave: verdict {rep.verdict}, window slopes "
          + ", ".join(f"{s:.4f}" for s in rep.slopes))
    return wf, rep


# --------------------------------------------------------------------------
# validation checks

@dataclass
class CheckResult:
    name: str
    quantity: str
    value: float
    threshold: str
    passed: bool


def _lt(name, quantity, value, bound):
    return CheckResult(name, quantity, float(value), f"<= {bound:g}", bool(value <= bound))


@contextmanager
def _prefixed(ctx, prefix):
    sub = Context(ctx.out, ctx.threads, ctx.use_cache, ctx.seed, [], ctx.cache, ctx.pool)
    orig = sub.path
    sub.path = lambda name: orig(f"{prefix}.{name}")
    try:
        yield sub
    finally:
        ctx.outputs.extend(sub.outputs)


def _quiet(fn, *a):
    import io
    from contextlib import redirect_stdout

    with redirect_stdout(io.StringIO()):
        return fn(*a)


def check_det_trivial(name, cfg, ctx, rng, opts):
    rows = _quiet(cmd_det_scan, cfg, ctx)
    return [_lt(name, "max |det - 1|", max(abs(d - 1) for _, _, d in rows), 1e-8)]


def check_null_resonances(name, cfg, ctx, rng, opts):
    rs = _quiet(cmd_resonances, cfg, ctx)
    n = len(rs.entries)
    return [CheckResult(name, "zeros found", n, "== 0", n == 0)]


def _well_profile(spec):
    k = spec.kind
    if not (spec.dimension == 1 and isinstance(k, Radial) and isinstance(k.profile, SquareWell)):
        raise ConfigError("potential", "this check needs a one-dimensional square well")
    lo, hi = k.profile.interval
    if lo != 0:
        raise ConfigError("potential", "square well profiles must start at 0")
    return complex(k.profile.amplitude), 2 * hi


def check_well_roots(name, cfg, ctx, rng, opts):
    V0, L = _well_profile(cfg.spec)
    rs = _quiet(cmd_resonances, cfg, ctx)
    reg = cfg.region
    oracle = square_well_roots(V0, L, reg["re"], reg["im"])
    if V0.imag == 0:
        # Newton seeds can miss imaginary-axis roots; add the bound states explicitly
        for b in square_well_bound_states(V0.real, L):
            if reg["im"][0] <= b.imag <= reg["im"][1] and all(abs(b - o) > 1e-8 for o in oracle):
                oracle.append(b)
    found = [e.lam for e in rs.entries]
    if len(found) != len(oracle):
        return [CheckResult(name, "root count vs oracle", len(found), f"== {len(oracle)}", False)]
    err = max((min(abs(z - o) for o in oracle) for z in found), default=0.0)
    return [CheckResult(name, "root count vs oracle", len(found), f"== {len(oracle)}", True),
            _lt(name, "max distance to oracle root", err, 1e-6)]


def check_sdet_1d(name, cfg, ctx, rng, opts):
    V0, L = _well_profile(cfg.spec)
    ph = cfg.need("phase")
    lams = np.sort(rng.uniform(ph.get("lambda_min", 0.5), ph.get("lambda_max", 10.0), 8))
    grid = _grid(cfg)
    ours = [sdet_ratio(cfg.spec, l, grid) for l in lams]
    ref = [smatrix_det_1d([(-L / 2, L / 2, V0)], l) for l in lams]
    err = max(abs(a - b) for a, b in zip(ours, ref))
    return [_lt(name, "max |ratio - transfer det S|", err, 1e-8)]


def check_scattering_trivial(name, cfg, ctx, rng, opts):
    sd, ff = _quiet(cmd_phase, cfg, ctx)
    out = [_lt(name, "max |s - 1|", np.max(np.abs(sd.s_values - 1)), 1e-6),
           _lt(name, "max |σ|", np.max(np.abs(sd.sigma)), 1e-6)]
    if ff:
        out.append(_lt(name, "max |far field - ratio|", max(abs(a - b) for a, b in ff.values()), 1e-3))
    return out


def check_homotopy(name, cfg, ctx, rng, opts):
    zs, hs = _quiet(cmd_homotopy, cfg, ctx)
    circle = np.array(hs[1:])
    return [_lt(name, "variation on the unit circle", np.max(np.abs(circle - circle[0])), 1e-8),
            _lt(name, "|h(0) - 1|", abs(hs[0] - 1), 1e-10)]


def check_mode_blocks(name, cfg, ctx, rng, opts):
    spec = _spec(cfg)
    if not isinstance(spec.kind, SeparableAngular):
        raise ConfigError("potential", "mode blocks need a separable potential")
    lam = float(cfg.homotopy.get("lambda", 2.0)) if cfg.homotopy else 2.0
    out = []
    for J in (16,):
        mb = mode_block_matrix(spec, lam, J)
        out.append(_lt(name, f"triangularity defect J={J}", triangularity_defect(mb), 1e-12))
        out.append(_lt(name, f"|det - 1| J={J}", abs(mb.det() - 1), 1e-10))
    return out


def check_mode_norm_slope(name, cfg, ctx, rng, opts):
    js, norms, slope = _quiet(cmd_mode_bounds, cfg, ctx)
    return [CheckResult(name, "log-log slope", slope, "in [-2.3, -1.7]", -2.3 <= slope <= -1.7)]


def check_bound_states(name, cfg, ctx, rng, opts):
    V0, L = _well_profile(cfg.spec)
    tol, kw = _zero_kw(cfg)
    rs = eigenvalue_scan(cfg.spec, _region(cfg), tol=tol, grid=_grid(cfg), **kw)
    write_resonances_csv(ctx.path("eigenvalues.csv"), rs)
    oracle = square_well_bound_states(V0.real, L)
    found = sorted((e.lam for e in rs.entries), key=lambda z: -z.imag)
    if len(found) != len(oracle):
        return [CheckResult(name, "eigenvalue count", len(found), f"== {len(oracle)}", False)]
    err = max((abs(a - b) for a, b in zip(found, oracle)), default=0.0)
    return [CheckResult(name, "eigenvalue count", len(found), f"== {len(oracle)}", True),
            _lt(name, "max distance to oracle", err, 1e-6)]


def check_counting(name, cfg, ctx, rng, opts):
    V0, L = _well_profile(cfg.spec)
    reg = cfg.need("region")
    r = float(reg["re"][1])
    rs = _quiet(cmd_resonances, cfg, ctx)
    n = counting_function(rs, r)
    target = 2 * L / math.pi
    rel = abs(n / r - target) / target
    return [_lt(name, f"|N({r:g})/{r:g} - 2 diam/pi| relative", rel, 0.15)]


def check_wave_verdict(name, cfg, ctx, rng, opts):
    wf, rep = _quiet(cmd_wave, cfg, ctx)
    expect = opts.get("expect", "SUPEREXP")
    out = [CheckResult(name, "verdict " + rep.verdict, float(len(rep.slopes)), f"== {expect}",
                       rep.verdict == expect)]
    if "rate" in opts:
        # exponential decay should follow the slowest resonance
        rate = abs(float(opts["rate"]))
        rel = max(abs(s - rate) for s in rep.slopes) / rate
        out.append(_lt(name, "slope vs resonance rate, relative", rel, float(opts.get("rate_tol", 0.2))))
    return out


CHECKS = {
    "det_trivial": check_det_trivial,
    "null_resonances": check_null_resonances,
    "well_roots": check_well_roots,
    "sdet_1d": check_sdet_1d,
    "scattering_trivial": check_scattering_trivial,
    "homotopy": check_homotopy,
    "mode_blocks": check_mode_blocks,
    "mode_norm_slope": check_mode_norm_slope,
    "bound_states": check_bound_states,
    "counting": check_counting,
    "wave_verdict": check_wave_verdict,
}


def cmd_validate(cfg, ctx):
    if not cfg.checks:
        raise ConfigError("checks", "validate needs a non-empty checks list")
    rng = np.random.default_rng(ctx.seed)
    results = []
    for i, entry in enumerate(cfg.checks):
        kind = entry["check"]
        if kind not in CHECKS:
            raise ConfigError(f"checks[{i}].check", f"unknown check {kind!r}; known: {sorted(CHECKS)}")
        sub = load_config(cfg.path.parent / entry["config"]) if "config" in entry else cfg
        label = entry.get("name", f"{i:02d}_{kind}")
        with _prefixed(ctx, label) as sctx:
            opts = {k: v for k, v in entry.items() if k not in ("check", "config", "name")}
            results += CHECKS[kind](label, sub, sctx, rng, opts)
    with open(ctx.path("validation.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["check", "quantity", "value", "threshold", "passed"])
        for r in results:
            w.writerow([r.name, r.quantity, format(r.value, ".17g"), r.threshold,
                        "PASS" if r.passed else "FAIL"])
    width = max(len(r.name) for r in results)
    qwidth = max(len(r.quantity) for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.quantity:<{qwidth}}  "
              f"{r.value:.3e}  {r.threshold}")
    ok = all(r.passed for r in results)
    print(f"validate: {sum(r.passed for r in results)}/{len(results)} passed")
    return ok


_DISPATCH = {
    "det-scan": cmd_det_scan,
    "resonances": cmd_resonances,
    "phase": cmd_phase,
    "homotopy": cmd_homotopy,
    "mode-bounds": cmd_mode_bounds,
    "wave": cmd_wave,
    "validate": cmd_validate,
}


# --------------------------------------------------------------------------
# entry point

def _sha256_file(p):
    return hashlib.sha256(Path(p).read_bytes()).hexdigest()


def write_manifest(ctx, cfg, command):
    doc = {
        "tool": "resonlab",
        "version": __version__,
        "command": command,
        "config": cfg.path.name,
        "config_sha256": cfg.sha256,
        "potential_sha256": (hashlib.sha256(cfg.potential_text.encode()).hexdigest()
                             if cfg.potential_text else None),
        "seed": ctx.seed,
        "cache": ctx.use_cache,
        "outputs": {p.name: _sha256_file(p) for p in sorted(set(ctx.outputs)) if p.exists()},
    }
    with open(ctx.out / "manifest.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="run configuration (YAML)")
    common.add_argument("--out", metavar="DIR", help="output directory (default: config 'out' or ./results)")
    common.add_argument("--threads", type=int, default=1, metavar="N", help="worker threads for scans")
    common.add_argument("--no-cache", action="store_true", help="disable the operator cache")
    common.add_argument("--seed", type=int, default=None, metavar="N", help="seed for randomized probes")
    p = argparse.ArgumentParser(prog="resonlab", description="Resonances, scattering determinants "
                                "and wave decay for compactly supported potentials.")
    p.add_argument("--version", action="version", version=f"resonlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "det-scan": "det(I + K(λ)) on a rectangle of λ, CSV and heatmap",
        "resonances": "zeros of the determinant in a rectangle",
        "phase": "scattering determinant and phase on real λ",
        "homotopy": "scattering determinant along z -> z^m V",
        "mode-bounds": "single angular mode norms of the free resolvent",
        "wave": "time-domain local energy decay and verdict",
        "validate": "oracle cross-checks with a pass/fail table",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        cfg = load_config(args.config)
    except SchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out or cfg.out or "results")
    seed = cfg.seed if args.seed is None else args.seed
    use_cache = cfg.cache and not args.no_cache
    ctx = Context(out, args.threads, use_cache, seed)
    if use_cache:
        ctx.cache = OperatorCache(_cache_root(), __version__)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if args.threads > 1:
            ctx.pool = ThreadPoolExecutor(max_workers=args.threads)
        result = _DISPATCH[args.command](cfg, ctx)
    except ResonlabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (SchemaError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    finally:
        if ctx.pool is not None:
            ctx.pool.shutdown()
    write_manifest(ctx, cfg, args.command)
    if args.command == "validate" and not result:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
