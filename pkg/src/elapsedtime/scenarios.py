"""Turn a :class:`ScenarioConfig` into solver objects, run it, write CSVs."""

import json
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ddm import ddm_run, resolve_mode
from .errors import CFLViolationError, InvalidParameterError
from .grid import (build_grid, cfl_dt_ddm, cfl_dt_itm, discretize_initial,
                   suggest_s_max)
from .hazards import (PHI_REGISTRY, SIGMA_REGISTRY, QuadraticActivityHazard,
                      StepHazard, VariableRefractoryHazard, DEFAULT_ACTIVITY_CAP)
from .itm import itm_run, linear_run
from .kernels import Exponential, Gaussian, Scaled, UnderResolvedKernelWarning
from .oracles import characteristics_profile
from .profiles import make_profile
from .steady import stationary_flux_roots

DEFAULT_DT_FACTOR = 0.9
FLUX_HEADER = "t,N,X,psi,mass,tv,jump"
DENSITY_HEADER = "t,s,n"
CONVERGENCE_HEADER = "ds,dt,l1_error,observed_order"


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# object construction

def build_hazard(cfg):
    hz = cfg.hazard
    cap = hz.get("cap", DEFAULT_ACTIVITY_CAP)
    params = lambda head: {k.split(".", 1)[1]: v for k, v in hz.items()
                           if k.startswith(head + ".")}
    if hz["kind"] == "step-fixed":
        phi = PHI_REGISTRY[hz["phi"]](**params("phi"))
        return StepHazard(phi, hz["sigma"], activity_cap=cap)
    if hz["kind"] == "step-variable":
        sig = SIGMA_REGISTRY[hz["sigma_fn"]](**params("sigma_fn"))
        return VariableRefractoryHazard(sig, hz.get("coupling", 1.0), activity_cap=cap)
    return QuadraticActivityHazard(hz.get("a", 1.0), hz.get("b", 1.0), activity_cap=cap)


def build_kernel(cfg):
    k = cfg.kernel
    inner = (Exponential(k["lambda"]) if k["kind"] == "exponential"
             else Gaussian(k["d"], k["lambda"]))
    J = k.get("J", 1.0)
    return inner if J == 1.0 else Scaled(J, inner)


def build_profile(cfg):
    params = {k: v for k, v in cfg.initial.items() if k != "profile"}
    return make_profile(cfg.initial["profile"], **params)


def _p_sup(model, ds, dt_guess=None):
    if model.bounded:
        return model.p_sup()
    cap = model.activity_cap
    if dt_guess is not None:
        cap = min(cap, model.cap_for_step(ds, dt_guess))
    return model.p_sup(cap)


def _default_dt(cfg, model, profile):
    """dt_factor (default 0.9) times the bound of the matching CFL condition."""
    ds = cfg.grid["ds"]
    factor = cfg.grid.get("dt_factor", DEFAULT_DT_FACTOR)
    if not model.bounded:
        # p_sup depends on the cap; use the user cap
        return factor * cfl_dt_itm(ds, model.p_sup(model.activity_cap))
    transport = cfl_dt_itm(ds, model.p_sup())
    if cfg.model != "ddm":
        return factor * transport
    kernel = build_kernel(cfg)
    mode = resolve_mode(kernel, factor * transport, cfg.kernel.get("mode", "auto"))
    if mode == "convolution":
        alpha0 = float(kernel(0.0))
        norms = model.norms()
        bound = cfl_dt_ddm(ds, norms.p_sup, norms.dNp_sup, alpha0, profile.mass)
        if bound == 0:
            raise InvalidParameterError(
                "convolution path impossible: d_X p is unbounded for this hazard; "
                "set [kernel] mode = ode or exact-limit")
        return factor * bound
    dt = factor * transport
    d = getattr(kernel.inner if kernel.kind == "scaled" else kernel, "d", 0.0)
    if mode == "exact-limit" and d > 0:
        dt = d / math.ceil(d / dt)          # make the lag an exact number of steps
    return dt


def check_time_step(cfg):
    """Message if an explicit dt violates the CFL bound, else None."""
    dt = cfg.grid.get("dt")
    if dt is None:
        return None
    try:
        model = build_hazard(cfg)
        ds = cfg.grid["ds"]
        p_sup = _p_sup(model, ds, dt)
        bound = cfl_dt_itm(ds, p_sup)
        if cfg.model == "ddm":
            kernel = build_kernel(cfg)
            mode = resolve_mode(kernel, dt, cfg.kernel.get("mode", "auto"))
            if mode == "convolution":
                norms = model.norms(None if model.bounded else
                                    min(model.activity_cap, model.cap_for_step(ds, dt)))
                bound = cfl_dt_ddm(ds, norms.p_sup, norms.dNp_sup, float(kernel(0.0)),
                                   build_profile(cfg).mass)
    except InvalidParameterError as exc:
        return str(exc)
    if dt > bound * (1 + 1e-12):
        return f"dt = {dt:.6g} violates the CFL condition: bound is {bound:.6g} (1/{1 / bound:.6g})"
    return None


@dataclass
class Built:
    cfg: object
    model: object
    profile: object
    grid: object
    n0: object
    kernel: object = None


def build(cfg, ds=None, s_max=None):
    """Hazard, profile, grid and discretized initial data for ``cfg``."""
    model = build_hazard(cfg)
    profile = build_profile(cfg)
    cfg_ds = ds if ds is not None else cfg.grid["ds"]
    if ds is not None and ds != cfg.grid["ds"]:
        cfg = _with_grid(cfg, ds=ds)
    T = cfg.grid["T"]
    dt = cfg.grid.get("dt") or _default_dt(cfg, model, profile)
    if s_max is None:
        s_max = cfg.grid.get("s_max") or suggest_s_max(profile.support, cfg_ds, dt, T)
    grid = build_grid(cfg_ds, dt, s_max, T)
    n0 = discretize_initial(profile, grid)
    kernel = build_kernel(cfg) if cfg.model == "ddm" else None
    return Built(cfg, model, profile, grid, n0, kernel)


def _with_grid(cfg, **updates):
    from dataclasses import replace
    g = dict(cfg.grid)
    g.update(updates)
    return replace(cfg, grid=g)


def simulate(built, snapshot_times=()):
    cfg = built.cfg
    if cfg.model == "itm":
        br = cfg.branch
        return itm_run(built.n0, built.model, built.grid, br["policy"], br.get("index"),
                       snapshot_times)
    if cfg.model == "ddm":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UnderResolvedKernelWarning)
            return ddm_run(built.n0, built.model, built.kernel, built.grid,
                           snapshot_times, cfg.kernel.get("mode", "auto"),
                           cfg.kernel.get("weights", "trapezoid"))
    value = cfg.flux["value"]
    return linear_run(built.n0, built.model, built.grid, lambda t: value,
                      snapshot_times)


# ---------------------------------------------------------------------------
# running and output

@dataclass
class RunReport:
    summary: dict
    trajectory: object
    files: list = field(default_factory=list)

    @property
    def exit_code(self):
        return 3 if self.summary.get("blowup_time") is not None else 0


def steady_roots(cfg, model=None):
    """Stationary flux roots for the scenario (hazard argument J N for DDM)."""
    model = model or build_hazard(cfg)
    J = cfg.kernel.get("J", 1.0) if cfg.model == "ddm" else 1.0
    upper = None
    if not model.bounded:
        upper = model.activity_cap
    return stationary_flux_roots(model, coupling=J, upper=upper)


def _metadata(cfg, grid, traj):
    meta = [f"scenario={cfg.name}", f"model={cfg.model}", f"ds={_fmt(grid.ds)}",
            f"dt={_fmt(grid.dt)}", f"T={_fmt(grid.T)}", f"s_max={_fmt(grid.s_max)}",
            f"steps={traj.steps}"]
    if "path" in traj.meta:
        meta.append(f"activity_path={traj.meta['path']}")
    return [f"# {m}" for m in meta]


def write_flux_csv(path, cfg, traj):
    X = traj.X
    lines = _metadata(cfg, traj.grid, traj) + [FLUX_HEADER]
    for m in range(traj.t.size):
        lines.append(",".join((
            _fmt(traj.t[m]), _fmt(traj.N[m]), _fmt(X[m]) if X is not None else "",
            _fmt(traj.psi[m]), _fmt(traj.mass[m]), _fmt(traj.tv[m]),
            "1" if traj.jump[m] else "0")))
    Path(path).write_text("\n".join(lines) + "\n")


def write_density_csv(path, cfg, traj):
    lines = _metadata(cfg, traj.grid, traj) + [DENSITY_HEADER]
    centers = traj.grid.centers
    for t in sorted(traj.snapshots):
        v = traj.snapshots[t].values
        ts = _fmt(t)
        lines.extend(f"{ts},{_fmt(s)},{_fmt(n)}" for s, n in zip(centers, v))
    Path(path).write_text("\n".join(lines) + "\n")


def run_scenario(cfg, out_dir=".", write=True) -> RunReport:
    started = time.perf_counter()
    built = build(cfg)
    traj = simulate(built, cfg.snapshot_times)
    files = []
    if write:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        flux_path = out / cfg.outputs.get("flux", f"{cfg.name}_flux.csv")
        dens_path = out / cfg.outputs.get("density", f"{cfg.name}_density.csv")
        write_flux_csv(flux_path, cfg, traj)
        write_density_csv(dens_path, cfg, traj)
        files = [str(flux_path), str(dens_path)]
    summary = summarize(cfg, built, traj)
    summary["wall_time"] = round(time.perf_counter() - started, 3)
    return RunReport(summary, traj, files)


def summarize(cfg, built, traj):
    final_N = float(traj.N[-1])
    s = {"scenario": cfg.name, "model": cfg.model, "ds": built.grid.ds,
         "dt": built.grid.dt, "steps": traj.steps, "final_t": float(traj.t[-1]),
         "final_N": final_N}
    if traj.X is not None:
        s["final_X"] = float(traj.X[-1])
    if cfg.model != "linear" and built.model.bounded:
        try:
            roots = steady_roots(cfg, built.model)
            s["steady_roots"] = roots
            s["steady_distance"] = min(abs(final_N - r) for r in roots) if roots else None
        except Exception as exc:          # report, do not fail the run
            s["steady_error"] = str(exc)
    s["jump_count"] = int(traj.jump.sum())
    s["min_psi"] = float(np.nanmin(traj.psi))
    s["mass_drift"] = traj.mass_drift
    b = traj.blowup
    s["blowup_time"] = float(b.t) if b is not None else None
    s["bound_violations"] = [k for k, _ in traj.bound_violations()]
    return s


def summary_line(summary):
    return json.dumps(summary, sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# convergence

def _l1(a, b, ds):
    return float(ds * np.abs(np.asarray(a) - np.asarray(b)).sum())


def _coarsen(values, factor):
    n = values.size // factor
    return values[:n * factor].reshape(n, factor).mean(axis=1)


def convergence_study(cfg, levels=3):
    """L1 error at the final time for ds, ds/2, ..., ds/2^(levels-1).

    A linear scenario is compared with the characteristics oracle.  Other
    scenarios are self-compared: the row for ds holds the L1 distance to the
    next finer level block-averaged onto the ds mesh, so ``levels`` runs
    yield ``levels - 1`` rows.
    Rows are (ds, dt, l1_error, observed_order) with order = log2 of the
    ratio to the previous row (NaN on the first).
    """
    if levels < 3:
        raise InvalidParameterError("a convergence study needs at least 3 levels")
    ds0 = cfg.grid["ds"]
    dss = [ds0 / 2 ** k for k in range(levels)]
    # one age domain for all levels, sized for the finest (slowest-spreading)
    probe = build(cfg, ds=dss[-1])
    coarse = build(cfg, ds=dss[0])
    s_max = max(probe.grid.s_max, coarse.grid.s_max)
    s_max = math.ceil(s_max / ds0 - 1e-9) * ds0
    runs = []
    for ds in dss:
        b = build(cfg, ds=ds, s_max=s_max)
        runs.append((b, simulate(b)))
    rows = []
    if cfg.model == "linear":
        value = cfg.flux["value"]
        for b, tr in runs:
            rate = lambda s, N, m=b.model: float(m.rate(s, N))
            exact = characteristics_profile(b.profile, lambda t: value, rate,
                                            b.grid.T, b.grid.centers)
            rows.append([b.grid.ds, b.grid.dt, _l1(tr.final_density.values, exact, b.grid.ds)])
    else:
        # successive differences: |u_h - u_{h/2}| estimates the error of u_h
        # without the bias a fixed finest reference adds to the order
        for k, (b, tr) in enumerate(runs[:-1]):
            proj = _coarsen(runs[k + 1][1].final_density.values, 2)
            v = tr.final_density.values
            n = min(v.size, proj.size)
            rows.append([b.grid.ds, b.grid.dt, _l1(v[:n], proj[:n], b.grid.ds)])
    prev = None
    for r in rows:
        r.append(math.log2(prev / r[2]) if prev and r[2] > 0 else math.nan)
        prev = r[2]
    return [tuple(r) for r in rows]


def write_convergence_csv(path, rows, cfg=None):
    lines = [f"# scenario={cfg.name}"] if cfg is not None else []
    lines.append(CONVERGENCE_HEADER)
    lines += [",".join(_fmt(x) for x in r) for r in rows]
    Path(path).write_text("\n".join(lines) + "\n")
