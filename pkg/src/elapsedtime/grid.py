"""Uniform age/time mesh, cell-averaged densities and CFL bounds."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .errors import (DomainTruncationError, InvalidParameterError,
                     UnboundedHazardError)

# Relative slack when deciding whether a ratio like s_max/ds is an integer.
_ROUND_TOL = 1e-9

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(5)


@dataclass(frozen=True)
class Grid:
    """Uniform discretization of [0, s_max] x [0, T].

    Cells are I_j = [(j-1) ds, j ds) with centers s_j = (j - 1/2) ds,
    j = 1..n_cells.  ``dt`` is reduced if needed so that T = M dt exactly.
    """

    ds: float
    dt: float
    s_max: float
    T: float
    M: int

    @property
    def n_cells(self) -> int:
        return int(round(self.s_max / self.ds))

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.ds

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.ds

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.M + 1) * self.dt

    @property
    def courant(self) -> float:
        return self.dt / self.ds


def _ceil_ratio(a, b):
    r = a / b
    k = math.floor(r + _ROUND_TOL * max(1.0, r))
    return k if abs(r - k) <= _ROUND_TOL * max(1.0, r) else math.ceil(r)


def build_grid(ds, dt, s_max, T) -> Grid:
    for name, v in (("ds", ds), ("dt", dt), ("s_max", s_max), ("T", T)):
        if not (v > 0 and math.isfinite(v)):
            raise InvalidParameterError(f"{name} must be positive and finite, got {v!r}")
    n_cells = _ceil_ratio(s_max, ds)
    M = _ceil_ratio(T, dt)
    return Grid(ds=float(ds), dt=float(T) / M, s_max=n_cells * float(ds),
                T=float(T), M=M)


def suggest_s_max(support, ds, dt, T, tail=1e-16):
    """Age-domain length that keeps the mass leaving the grid below ``tail``.

    The upwind stencil moves each parcel one cell per step with probability
    dt/ds, so below unit Courant number mass spreads ahead of the s = t
    characteristic like a binomial front.  The domain covers the support
    plus the ``tail`` quantile of that front plus two guard cells.
    """
    M = _ceil_ratio(T, dt)
    nu = min(1.0, dt / ds)
    shift = M if nu >= 1.0 else int(binom.isf(tail, M, nu))
    return support + ds * (shift + 2)


def cfl_dt_itm(ds, p_sup):
    """Largest stable step for the ITM upwind update, (1/ds + ||p||)^-1."""
    if ds <= 0:
        raise InvalidParameterError("ds must be positive")
    if math.isinf(p_sup):
        raise UnboundedHazardError(
            "hazard is unbounded; supply a runtime activity cap so that "
            "||p||_inf can be evaluated over [0, cap]")
    if p_sup < 0 or math.isnan(p_sup):
        raise InvalidParameterError(f"p_sup must be >= 0, got {p_sup!r}")
    return 1.0 / (1.0 / ds + p_sup)


def cfl_dt_ddm(ds, p_sup, dXp_sup, alpha0, mass0):
    """Largest step for the DDM scheme.

    The second term keeps the per-step activity equation contractive; it is
    treated as +inf when alpha0 * dXp_sup * mass0 vanishes.
    """
    transport = cfl_dt_itm(ds, p_sup)
    for name, v in (("dXp_sup", dXp_sup), ("alpha0", alpha0), ("mass0", mass0)):
        if v < 0 or math.isnan(v):
            raise InvalidParameterError(f"{name} must be >= 0, got {v!r}")
    denom = alpha0 * dXp_sup * mass0
    if math.isinf(dXp_sup) and denom != 0:
        return 0.0
    coupling = math.inf if denom == 0 else 2.0 / denom
    return min(transport, coupling)


@dataclass(frozen=True)
class DensityVector:
    """Nonnegative cell averages n_1..n_J; zero beyond the last cell."""

    values: np.ndarray
    ds: float

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.size and not v.min() >= -1e-14:
            raise InvalidParameterError(f"density entries must be >= 0, got min {v.min():.3e}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    @property
    def mass(self) -> float:
        return total_mass(self)

    @property
    def sup(self) -> float:
        return float(self.values.max()) if self.values.size else 0.0

    def support_index(self) -> int:
        """1-based index of the last nonzero cell (0 if the vector is zero)."""
        nz = np.flatnonzero(self.values)
        return int(nz[-1]) + 1 if nz.size else 0


def total_mass(n: DensityVector) -> float:
    return float(n.ds * np.sum(n.values))


def total_variation(n: DensityVector, N) -> float:
    """Discrete TV with the boundary term |n_1 - N| and a trailing zero."""
    v = n.values
    if v.size == 0:
        return abs(N)
    inner = np.abs(np.diff(v)).sum()
    return float(abs(v[0] - N) + inner + abs(v[-1]))


def cell_averages(f, grid_or_edges, breakpoints=()):
    """Cell averages of ``f`` by 5-point Gauss-Legendre on each cell.

    Cells are split at ``breakpoints`` so that piecewise-smooth profiles
    are integrated to quadrature accuracy rather than O(ds).
    """
    edges = grid_or_edges.edges if isinstance(grid_or_edges, Grid) else np.asarray(grid_or_edges)
    ds = edges[1] - edges[0]
    bp = np.asarray([b for b in breakpoints if edges[0] < b < edges[-1]], dtype=float)
    pts = np.union1d(edges, bp)
    lo, hi = pts[:-1], pts[1:]
    keep = hi - lo > 1e-14 * ds
    lo, hi = lo[keep], hi[keep]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    integrals = (np.asarray(f(nodes), dtype=float) * _GL_WEIGHTS).sum(axis=1) * half
    owner = np.minimum(np.floor((mid - edges[0]) / ds).astype(int), edges.size - 2)
    out = np.zeros(edges.size - 1)
    np.add.at(out, owner, integrals)
    return out / ds


def discretize_initial(n0, grid: Grid) -> DensityVector:
    """Cell averages of a closed-form initial profile on ``grid``.

    ``n0`` needs ``__call__`` (vectorized), ``support`` (right end of the
    numerical support) and ``breakpoints``.  Support must fit in
    [0, s_max - T] because mass travels at unit speed.
    """
    if n0.support + grid.T > grid.s_max + _ROUND_TOL * grid.s_max:
        raise DomainTruncationError(
            f"initial support ends at s={n0.support:.6g}; with T={grid.T:.6g} "
            f"the grid needs s_max >= {n0.support + grid.T:.6g}, has {grid.s_max:.6g}")
    values = cell_averages(n0, grid, tuple(n0.breakpoints) + (n0.support,))
    values[grid.edges[:-1] >= n0.support] = 0.0
    values = np.where(values < 0, 0.0, values)
    return DensityVector(values, grid.ds)
