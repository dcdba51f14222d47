"""Run results shared by the ITM and DDM solvers."""

import math
from dataclasses import dataclass, field

import numpy as np

# slack on the a-priori bounds; entries are compared after rounding
BOUND_SLACK = 1e-14


@dataclass
class Event:
    kind: str            # "jump" or "blow-up"
    step: int
    t: float
    detail: dict = field(default_factory=dict)


@dataclass
class Trajectory:
    model: str                       # "itm", "ddm", "linear"
    grid: object
    t: np.ndarray
    N: np.ndarray
    psi: np.ndarray
    mass: np.ndarray
    tv: np.ndarray
    jump: np.ndarray
    n_roots: np.ndarray
    X: np.ndarray = None
    snapshots: dict = field(default_factory=dict)
    events: list = field(default_factory=list)
    outflow: float = 0.0
    density_min: float = 0.0
    density_max: float = 0.0
    final_density: object = None
    meta: dict = field(default_factory=dict)

    @property
    def steps(self):
        return self.t.size - 1

    @property
    def jump_times(self):
        return self.t[self.jump]

    @property
    def blowup(self):
        for e in self.events:
            if e.kind == "blow-up":
                return e
        return None

    @property
    def mass_drift(self):
        m0 = self.mass[0]
        return float(np.max(np.abs(self.mass - m0)) / m0) if m0 > 0 else 0.0

    def value_at(self, name, t):
        """Linear interpolation of a scalar series at time(s) t."""
        series = getattr(self, name)
        return np.interp(t, self.t, series)

    def bound_violations(self, slack=BOUND_SLACK):
        """A-priori bounds that fail anywhere along the run.

        Density in [0, ||n0||_inf], 0 <= N <= ||p|| ||n0||_1 and, for the DDM,
        0 <= X <= ||p|| ||n0||_1 ||alpha||_1.
        """
        out = []
        m = self.meta
        if self.density_min < -slack:
            out.append(("density-min", self.density_min))
        if self.density_max > m["n0_sup"] + slack:
            out.append(("density-max", self.density_max))
        n_bound = m["p_sup"] * m["mass0"]
        tol = 1e-12 * max(1.0, n_bound)
        if self.N.min() < -tol or self.N.max() > n_bound + tol:
            out.append(("flux", float(self.N.max())))
        if self.X is not None and "alpha_l1" in m:
            x_bound = n_bound * m["alpha_l1"]
            if self.X.min() < -tol or self.X.max() > x_bound + tol * max(1.0, m["alpha_l1"]):
                out.append(("activity", float(self.X.max())))
        return out



def bv_constants(norms, mass0, sup0):
    """(C1, C2) of the discrete BV estimate, defined when gamma ||n0||_1 < 1.

    C1 = ||p|| / (1 - gamma ||n0||_1) is the Lipschitz constant of the flux
    map; C2 = ||d_s p|| ||n0||_1 + ||p|| C1 ||n0||_1 + ||p|| ||n0||_inf, with
    the first term replaced by ||p|| ||n0||_inf for step hazards (d_s p is
    then a measure and only the jump cell contributes).
    """
    from .errors import InvalidParameterError
    if norms.gamma * mass0 >= 1.0:
        raise InvalidParameterError(
            "BV constants need weak interconnection (gamma ||n0||_1 < 1)")
    p = norms.p_sup
    C1 = p / (1.0 - norms.gamma * mass0)
    s_term = p * sup0 if math.isinf(norms.dsp_sup) else norms.dsp_sup * mass0
    return C1, s_term + p * C1 * mass0 + p * sup0


def bv_bound(t, tv0, C1, C2):
    """exp(C1 t) TV0 + (C2 / C1)(exp(C1 t) - 1), the bound the recursion gives."""
    g = math.exp(C1 * t)
    if C1 == 0:
        return tv0 + C2 * t
    return g * tv0 + C2 / C1 * (g - 1.0)
