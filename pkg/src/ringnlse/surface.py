"""Containers for swept spectra: per-sheet grids of converged solutions.

A surface is a set of named sheets over a common (t, v) grid.  Each sheet
cell records the converged unknowns, the Jacobi kind/branch, residual norms
and a status flag; gaps (folds, excluded columns, failed solves) stay
explicit.  Level views rank converged sheet energies per cell.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

CELL_OK = 1
CELL_EMPTY = 0
CELL_FAILED = -1
CELL_EXCLUDED = -2  # e.g. t = 0 column, outside the connected chart


@dataclass
class Sheet:
    name: str
    parity: str  # 'even' | 'odd' | 'none' (pinning class used on |t| = 1 rows)
    nt: int
    nv: int
    status: np.ndarray = None
    E: np.ndarray = None
    m: np.ndarray = None          # complex storage; circle branch has Im != 0
    x0: np.ndarray = None
    kind: np.ndarray = None       # '' | 'sn' | ... | 'const' | 'lin'
    res: np.ndarray = None        # (nt, nv, 3) residual magnitudes
    note: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = (self.nt, self.nv)
        if self.status is None:
            self.status = np.full(shape, CELL_EMPTY, dtype=np.int8)
        if self.E is None:
            self.E = np.full(shape, np.nan)
        if self.m is None:
            self.m = np.full(shape, np.nan, dtype=complex)
        if self.x0 is None:
            self.x0 = np.full(shape, np.nan)
        if self.kind is None:
            self.kind = np.full(shape, "", dtype=object)
        if self.res is None:
            self.res = np.full(shape + (3,), np.nan)

    def put(self, it, iv, E, m, x0, kind, res, status=CELL_OK):
        self.status[it, iv] = status
        self.E[it, iv] = E
        self.m[it, iv] = m
        self.x0[it, iv] = x0
        self.kind[it, iv] = kind
        self.res[it, iv, :] = res

    def converged_cells(self):
        its, ivs = np.nonzero(self.status == CELL_OK)
        return list(zip(its.tolist(), ivs.tolist()))


@dataclass
class SpectrumSurface:
    which: str                 # 'delta' | 'delta_prime'
    g: float
    ts: np.ndarray
    vs: np.ndarray
    sheets: list
    meta: dict = field(default_factory=dict)

    def sheet(self, name: str) -> Sheet:
        for s in self.sheets:
            if s.name == name:
                return s
        raise KeyError(name)

    def level_energies(self, it: int, iv: int):
        """Converged sheet energies at one cell, ascending, with sheet names."""
        found = []
        for s in self.sheets:
            if s.status[it, iv] == CELL_OK:
                found.append((float(s.E[it, iv]), s.name))
        found.sort()
        return found

    def level_view(self, levels: int):
        """E[level, it, iv] by per-cell energy rank (NaN where absent)."""
        out = np.full((levels, len(self.ts), len(self.vs)), np.nan)
        for it in range(len(self.ts)):
            for iv in range(len(self.vs)):
                for rank, (E, _) in enumerate(self.level_energies(it, iv)[:levels]):
                    out[rank, it, iv] = E
        return out

    def to_jsonable(self) -> dict:
        def cplx(z):
            return [float(np.real(z)), float(np.imag(z))]
        sheets = []
        for s in self.sheets:
            cells = []
            for it, iv in s.converged_cells():
                cells.append({
                    "it": it, "iv": iv,
                    "E": float(s.E[it, iv]),
                    "m": cplx(s.m[it, iv]),
                    "x0": float(s.x0[it, iv]),
                    "kind": str(s.kind[it, iv]),
                    "res": [float(r) for r in s.res[it, iv]],
                })
            sheets.append({
                "name": s.name,
                "parity": s.parity,
                "status": s.status.tolist(),
                "cells": cells,
            })
        return {
            "which": self.which,
            "g": self.g,
            "t_grid": [float(t) for t in self.ts],
            "v_grid": [float(v) for v in self.vs],
            "sheets": sheets,
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_jsonable(), sort_keys=True, indent=1)


def surface_from_jsonable(data: dict) -> SpectrumSurface:
    ts = np.asarray(data["t_grid"], dtype=float)
    vs = np.asarray(data["v_grid"], dtype=float)
    sheets = []
    for sd in data["sheets"]:
        sh = Sheet(sd["name"], sd["parity"], len(ts), len(vs))
        sh.status = np.asarray(sd["status"], dtype=np.int8)
        sh.status[sh.status == CELL_OK] = CELL_EMPTY  # refill from cells below
        for c in sd["cells"]:
            sh.put(c["it"], c["iv"], c["E"], complex(c["m"][0], c["m"][1]),
                   c["x0"], c["kind"], c["res"])
        sheets.append(sh)
    return SpectrumSurface(data["which"], data["g"], ts, vs, sheets, data.get("meta", {}))


@dataclass
class MappedPoint:
    t: float
    v: float
    E: float
    m: complex
    x0: float
    kind: str
    sheet: str
    src_it: int
    src_iv: int
    residuals: tuple


@dataclass
class MappedSurface:
    """Scatter image of a delta surface in the (t', v') chart."""
    g: float
    points: list
    singular: list = field(default_factory=list)  # (sheet, it, iv, reason)
    meta: dict = field(default_factory=dict)

    def bin_to_grid(self, ts, vs):
        """Nearest-cell binning; returns (E_grid, distance_grid, count_grid)."""
        ts = np.asarray(ts, dtype=float)
        vs = np.asarray(vs, dtype=float)
        E = np.full((len(ts), len(vs)), np.nan)
        dist = np.full((len(ts), len(vs)), np.inf)
        count = np.zeros((len(ts), len(vs)), dtype=int)
        dt = ts[1] - ts[0] if len(ts) > 1 else 1.0
        dv = vs[1] - vs[0] if len(vs) > 1 else 1.0
        for p in self.points:
            it = int(round((p.t - ts[0]) / dt))
            iv = int(round((p.v - vs[0]) / dv))
            if not (0 <= it < len(ts) and 0 <= iv < len(vs)):
                continue
            d = math.hypot((p.t - ts[it]) / dt, (p.v - vs[iv]) / dv)
            count[it, iv] += 1
            if d < dist[it, iv]:
                dist[it, iv] = d
                E[it, iv] = p.E
        return E, dist, count
