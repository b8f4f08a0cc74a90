"""Batch front-end: sweeps, limits, mappings, classification, artifacts.

Configuration is a flat key = value text file plus command-line overrides
(flags win).  Output files are byte-deterministic for a fixed configuration
at worker count 1: full-precision decimals, sorted keys, no timestamps.

Exit codes: 0 complete, 2 partial (some cells unconverged), 1 fatal.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, ring_limit, spectrum, svgplot
from .boundary import DeltaBC, DeltaPrimeBC
from .errors import RingNLSEError, NotFound
from .linear_limit import linear_levels
from .solutions import RingConfig, SolutionSpec, TWO_PI
from .spectrum import _eval_raw  # profile rendering only
from .surface import CELL_OK, SpectrumSurface, surface_from_jsonable

_COMMANDS = ("sweep", "linear", "ring-limit", "map", "classify", "bubble-scan")


@dataclass
class RunConfig:
    command: str
    g: float = -5.0
    cond: str = "delta"            # 'delta' | 'delta-prime'
    t_min: float = -2.0
    t_max: float = 2.0
    t_n: int = 41
    v_min: float = -10.0
    v_max: float = 10.0
    v_n: int = 41
    levels: int = 4
    out: str = "out"
    workers: int = 1
    newton_tol: float = 1e-10
    quad_tol: float = 1e-12
    j: int = 1
    j_max: int = 3
    g_lo: float = -3.3
    g_hi: float = -3.0
    source: str = ""               # surface.json for map/classify
    level: int = 1
    profiles: list = field(default_factory=list)  # (t, v) pairs
    refine: int = 0

    def validate(self):
        if self.command not in _COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        for name in ("t_min", "t_max", "v_min", "v_max", "g"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.levels < 1 or self.t_n < 2 or self.v_n < 2:
            raise ValueError("levels >= 1 and grid sizes >= 2 required")
        if self.newton_tol <= 0 or self.quad_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.cond not in ("delta", "delta-prime"):
            raise ValueError("cond must be delta or delta-prime")

    @property
    def which(self) -> str:
        return "delta" if self.cond == "delta" else "delta_prime"

    def ts(self):
        return np.linspace(self.t_min, self.t_max, self.t_n)

    def vs(self):
        return np.linspace(self.v_min, self.v_max, self.v_n)


_FLOAT_KEYS = ("g", "t_min", "t_max", "v_min", "v_max", "newton_tol", "quad_tol",
               "g_lo", "g_hi")
_INT_KEYS = ("t_n", "v_n", "levels", "workers", "j", "j_max", "level", "refine")


def parse_config_file(path: str) -> dict:
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key] = val
    return out


def _coerce(cfg: RunConfig, key: str, val):
    if key in _FLOAT_KEYS:
        val = float(val)
    elif key in _INT_KEYS:
        val = int(val)
    elif key == "profiles" and isinstance(val, str):
        val = [tuple(float(x) for x in pair.split(",")) for pair in val.split(";") if pair]
    if not hasattr(cfg, key):
        raise ValueError(f"unknown config key {key!r}")
    setattr(cfg, key, val)


def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.17g}"


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _spectrum_csv(surface: SpectrumSurface) -> str:
    rows = ["level,t,v,E,m_re,m_im,x0,kind,res_norm,res_bc1,res_bc2,converged,sheet"]
    nt, nv = len(surface.ts), len(surface.vs)
    maxlev = surface.meta.get("levels", 4)
    for it in range(nt):
        for iv in range(nv):
            ranked = surface.level_energies(it, iv)
            for rank in range(maxlev):
                t, v = surface.ts[it], surface.vs[iv]
                if rank < len(ranked):
                    E, name = ranked[rank]
                    s = surface.sheet(name)
                    m = s.m[it, iv]
                    rows.append(",".join([
                        str(rank + 1), _num(t), _num(v), _num(E),
                        _num(m.real), _num(m.imag), _num(s.x0[it, iv]),
                        str(s.kind[it, iv]),
                        _num(s.res[it, iv, 0]), _num(s.res[it, iv, 1]),
                        _num(s.res[it, iv, 2]), "1", name,
                    ]))
                else:
                    rows.append(",".join([str(rank + 1), _num(t), _num(v),
                                          "nan", "nan", "nan", "nan", "",
                                          "nan", "nan", "nan", "0", ""]))
    return "\n".join(rows) + "\n"


def _surface_json(surface: SpectrumSurface, cfg: RunConfig) -> str:
    data = surface.to_jsonable()
    data["meta"] = dict(data.get("meta", {}))
    data["meta"].update({
        "version": __version__,
        "newton_tol": cfg.newton_tol,
        "quad_tol": cfg.quad_tol,
        "config": {
            "g": cfg.g, "cond": cfg.cond, "levels": cfg.levels,
            "t": [cfg.t_min, cfg.t_max, cfg.t_n],
            "v": [cfg.v_min, cfg.v_max, cfg.v_n],
        },
    })
    return json.dumps(data, sort_keys=True, indent=1) + "\n"


def _emit_level_svgs(surface: SpectrumSurface, outdir: Path, cfg: RunConfig):
    view = surface.level_view(cfg.levels)
    for lev in range(cfg.levels):
        svg = svgplot.heatmap_svg(surface.ts, surface.vs, view[lev],
                                  f"E level {lev + 1} (g={_num(surface.g)}, {surface.which})")
        _write(outdir / f"spectrum_level{lev + 1}.svg", svg)


def _emit_profiles(surface: SpectrumSurface, outdir: Path, cfg: RunConfig):
    xs = np.linspace(0.0, TWO_PI, 401)
    for (t, v) in cfg.profiles:
        it = int(np.argmin(np.abs(surface.ts - t)))
        iv = int(np.argmin(np.abs(surface.vs - v)))
        curves = []
        for rank, (E, name) in enumerate(surface.level_energies(it, iv)[:cfg.levels]):
            st = spectrum.sheet_state(surface.sheet(name), it, iv, surface.ts, surface.vs)
            if st is None:
                if str(surface.sheet(name).kind[it, iv]) == "const":
                    curves.append((f"L{rank + 1} const E={E:.4f}",
                                   np.full_like(xs, 1.0 / math.sqrt(TWO_PI))))
                continue
            kind, circle, (Ez, mm, x0), _ = st
            import cmath
            m = cmath.exp(1j * mm) if circle else mm
            spc = SolutionSpec(kind, Ez, m, x0, RingConfig(surface.g))
            curves.append((f"L{rank + 1} {kind}{'*' if circle else ''} E={E:.4f}",
                           _eval_raw(spc, xs, 0)))
        if curves:
            svg = svgplot.profiles_svg(xs, curves,
                                       f"profiles at t={_num(surface.ts[it])} v={_num(surface.vs[iv])}")
            _write(outdir / f"profiles_t{_num(surface.ts[it])}_v{_num(surface.vs[iv])}.svg", svg)


def _cmd_sweep(cfg: RunConfig) -> int:
    outdir = Path(cfg.out)
    surface = spectrum.sweep(cfg.ts(), cfg.vs(), cfg.g, cfg.which, cfg.levels,
                             workers=cfg.workers)
    _write(outdir / "spectrum.csv", _spectrum_csv(surface))
    _write(outdir / "surface.json", _surface_json(surface, cfg))
    _emit_level_svgs(surface, outdir, cfg)
    _emit_profiles(surface, outdir, cfg)
    unconverged = sum(int(np.sum(s.status == -1)) for s in surface.sheets)
    return 2 if unconverged else 0


def _cmd_linear(cfg: RunConfig) -> int:
    outdir = Path(cfg.out)
    ts, vs = cfg.ts(), cfg.vs()
    rows = ["level,t,v,E,k,x0,A,shape,converged"]
    E = np.full((cfg.levels, len(ts), len(vs)), np.nan)
    failed = 0
    for it, t in enumerate(ts):
        for iv, v in enumerate(vs):
            sols = []
            if t != 0.0:
                bc = DeltaBC(t, v) if cfg.which == "delta" else DeltaPrimeBC(t, v)
                try:
                    sols = linear_levels(bc, cfg.which, cfg.levels)
                except RingNLSEError:
                    sols = []
            for lev in range(cfg.levels):
                if lev < len(sols):
                    s = sols[lev]
                    E[lev, it, iv] = s.E
                    rows.append(",".join([str(lev + 1), _num(t), _num(v), _num(s.E),
                                          _num(s.k),
                                          _num(s.x0) if s.x0 is not None else "nan",
                                          _num(s.A) if s.A is not None else "nan",
                                          s.shape, "1"]))
                else:
                    failed += 1
                    rows.append(",".join([str(lev + 1), _num(t), _num(v),
                                          "nan", "nan", "nan", "nan", "", "0"]))
    _write(outdir / "spectrum.csv", "\n".join(rows) + "\n")
    for lev in range(cfg.levels):
        svg = svgplot.heatmap_svg(ts, vs, E[lev], f"linear E level {lev + 1} ({cfg.which})")
        _write(outdir / f"linear_level{lev + 1}.svg", svg)
    return 2 if failed else 0


def _cmd_ring_limit(cfg: RunConfig) -> int:
    outdir = Path(cfg.out)
    rows = ["j,g_emerge,E_emerge"]
    for j, g, E in ring_limit.emergence_points(cfg.j_max):
        rows.append(f"{j},{_num(g)},{_num(E)}")
    _write(outdir / "emergence.csv", "\n".join(rows) + "\n")
    # branch energies against the coupling, Fig.-3 style
    gs = np.linspace(cfg.g_lo, cfg.g_hi, 201) if cfg.g_lo < cfg.g_hi else \
        np.linspace(-15.0, 15.0, 301)
    curves = {"const": [], "plane2": []}
    rows = ["branch,j,g,m,E"]
    for g in gs:
        if g == 0.0:
            continue
        rows.append(f"const,1,{_num(g)},0,{_num(ring_limit.constant_and_plane_wave_spectrum(1, g))}")
        rows.append(f"plane,2,{_num(g)},0,{_num(ring_limit.constant_and_plane_wave_spectrum(2, g))}")
        for kind in ("sn", "cn", "dn"):
            for j in range(1, cfg.j_max + 1):
                try:
                    sol = ring_limit.solve_periodic(kind, float(j), float(g))
                except RingNLSEError:
                    continue
                rows.append(f"{kind},{j},{_num(g)},{_num(sol.m)},{_num(sol.E)}")
    _write(outdir / "curves.csv", "\n".join(rows) + "\n")
    return 0


def _cmd_map(cfg: RunConfig) -> int:
    outdir = Path(cfg.out)
    data = json.loads(Path(cfg.source).read_text())
    surface = surface_from_jsonable(data)
    mapped = spectrum.map_surface_to_delta_prime(surface)
    rows = ["tp,vp,E,m_re,m_im,x0,kind,sheet,src_it,src_iv,res1,res2"]
    for p in sorted(mapped.points, key=lambda q: (q.sheet, q.src_it, q.src_iv)):
        rows.append(",".join([_num(p.t), _num(p.v), _num(p.E), _num(p.m.real),
                              _num(p.m.imag), _num(p.x0), p.kind, p.sheet,
                              str(p.src_it), str(p.src_iv),
                              _num(p.residuals[0]), _num(p.residuals[1])]))
    _write(outdir / "mapped.csv", "\n".join(rows) + "\n")
    Eg, dist, count = mapped.bin_to_grid(cfg.ts(), cfg.vs())
    meta = {
        "singular_cells": len(mapped.singular),
        "points": len(mapped.points),
        "bin_tolerance": float(np.max(dist[np.isfinite(dist) & (count > 0)]))
        if np.any(count > 0) else None,
    }
    _write(outdir / "mapped_meta.json", json.dumps(meta, sort_keys=True, indent=1) + "\n")
    pts = mapped.points
    svg = svgplot.scatter_svg([p.t for p in pts], [p.v for p in pts], [p.E for p in pts],
                              f"delta-prime image (g={_num(mapped.g)})", "t'", "v'")
    _write(outdir / "mapped.svg", svg)
    return 0


def _cmd_classify(cfg: RunConfig) -> int:
    outdir = Path(cfg.out)
    data = json.loads(Path(cfg.source).read_text())
    surface = surface_from_jsonable(data)
    region = spectrum.classify_regions(surface, cfg.level, refine_steps=cfg.refine)
    rows = ["t,v,kind"]
    for it in range(len(surface.ts)):
        for iv in range(len(surface.vs)):
            rows.append(f"{_num(surface.ts[it])},{_num(surface.vs[iv])},{region.tags[it, iv]}")
    _write(outdir / "regions.csv", "\n".join(rows) + "\n")
    rows = ["v,t_lo,t_hi,kind_lo,kind_hi"]
    for v, tlo, thi, a, b in region.boundaries:
        rows.append(f"{_num(v)},{_num(tlo)},{_num(thi)},{a},{b}")
    _write(outdir / "boundaries.csv", "\n".join(rows) + "\n")
    svg = svgplot.region_svg(surface.ts, surface.vs, region.tags,
                             f"eigenfunction regions, level {cfg.level} (g={_num(surface.g)})")
    _write(outdir / "regions.svg", svg)
    return 0


def _cmd_bubble_scan(cfg: RunConfig) -> int:
    outdir = Path(cfg.out)
    g_star, E_star = spectrum.detect_bubble((cfg.g_lo, cfg.g_hi), cfg.j)
    expected = -math.pi * cfg.j ** 2
    report = {
        "j": cfg.j,
        "g_star": g_star,
        "E_star": E_star,
        "expected_g": expected,
        "abs_error_vs_expected": abs(g_star - expected),
    }
    _write(outdir / "bubble.json", json.dumps(report, sort_keys=True, indent=1) + "\n")
    print(f"dn-{cfg.j} emergence: g* = {_num(g_star)}  E* = {_num(E_star)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ringnlse",
                                 description="Stationary NLSE states on a defect ring")
    ap.add_argument("command", choices=_COMMANDS)
    ap.add_argument("--config", help="flat key = value configuration file")
    ap.add_argument("--g", type=float)
    ap.add_argument("--cond", choices=("delta", "delta-prime"))
    ap.add_argument("--t-min", dest="t_min", type=float)
    ap.add_argument("--t-max", dest="t_max", type=float)
    ap.add_argument("--t-n", dest="t_n", type=int)
    ap.add_argument("--v-min", dest="v_min", type=float)
    ap.add_argument("--v-max", dest="v_max", type=float)
    ap.add_argument("--v-n", dest="v_n", type=int)
    ap.add_argument("--levels", type=int)
    ap.add_argument("--level", type=int, help="level rank for classify")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--newton-tol", dest="newton_tol", type=float)
    ap.add_argument("--quad-tol", dest="quad_tol", type=float)
    ap.add_argument("--j", type=int)
    ap.add_argument("--j-max", dest="j_max", type=int)
    ap.add_argument("--g-lo", dest="g_lo", type=float)
    ap.add_argument("--g-hi", dest="g_hi", type=float)
    ap.add_argument("--source", help="surface.json input for map/classify")
    ap.add_argument("--refine", type=int, help="boundary bisection steps for classify")
    ap.add_argument("--profile", action="append", default=None,
                    help="t,v pair for eigenfunction profiles (repeatable)")
    return ap


def run(cfg: RunConfig) -> int:
    cfg.validate()
    spectrum.NEWTON_TOL = cfg.newton_tol
    spectrum._NORM_ABSTOL = cfg.quad_tol
    dispatch = {
        "sweep": _cmd_sweep,
        "linear": _cmd_linear,
        "ring-limit": _cmd_ring_limit,
        "map": _cmd_map,
        "classify": _cmd_classify,
        "bubble-scan": _cmd_bubble_scan,
    }
    return dispatch[cfg.command](cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(command=args.command)
    try:
        if args.config:
            for key, val in parse_config_file(args.config).items():
                _coerce(cfg, key, val)
        for key in vars(cfg):
            if key in ("command", "profiles"):
                continue
            val = getattr(args, key, None)
            if val is not None:
                setattr(cfg, key, val)
        if args.profile:
            cfg.profiles = [tuple(float(x) for x in p.split(",")) for p in args.profile]
        return run(cfg)
    except (RingNLSEError, NotFound, ValueError, OSError) as err:
        report = {"error": type(err).__name__, "message": str(err)}
        print(json.dumps(report, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
