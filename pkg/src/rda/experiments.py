"""Experiment runners: convergence, RDA vs DG, conditioning, preconditioners."""
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
import csv
import os
import time

import numpy as np
from scipy.sparse.linalg import spsolve

from .basis import dim_poly
from .dgcore import BrokenSpace, assemble_a0, assemble_dg, assemble_rda, error_norms
from .mesh import import_poly_mesh, structured_hierarchy
from .patch import build_patches, default_threshold
from .problems import get_problem, problem_names
from .recon import build_operator
from .report import ConvergenceReport, fit_order, write_csv, write_svg
from .solve import (
    PRECONDITIONERS,
    build_mg,
    condition_estimate,
    gmres,
    make_preconditioner,
    write_matrix_market,
)

EXPERIMENTS = ("convergence", "dg-compare", "condition", "precond-bench")
MAX_DEGREE = {2: 4, 3: 3}

_DEFAULTS = {
    ("convergence", 2): dict(problem="example1", hs=["1/10", "1/20", "1/40", "1/80"], ms=[1, 2, 3, 4]),
    ("convergence", 3): dict(problem="example2", hs=["1/4", "1/8", "1/16"], ms=[1, 2, 3]),
    ("dg-compare", 2): dict(problem="example1", hs=["1/5", "1/10", "1/20", "1/40"], ms=[1, 2, 3, 4]),
    ("dg-compare", 3): dict(problem="example2", hs=["1/2", "1/4", "1/8"], ms=[1, 2, 3]),
    ("condition", 2): dict(problem="example1", hs=["1/10", "1/20"], ms=[1, 2, 3]),
    ("condition", 3): dict(problem="example2", hs=["1/2", "1/4"], ms=[1, 2, 3]),
    ("precond-bench", 2): dict(problem="example4", hs=["1/10", "1/20", "1/40", "1/80"],
                               ms=[1, 2, 3, 4]),
    ("precond-bench", 3): dict(problem="example7", hs=["1/4", "1/8", "1/16"], ms=[1, 2, 3]),
}

MESH_NOTE = ("structured meshes: h is the grid spacing (n = side/h squares or cubes per axis); "
             "squares split along the upper-left to lower-right diagonal, cubes into 6 Kuhn "
             "tetrahedra; element diameter = sqrt(dim) * h")


class ConfigError(ValueError):
    """Invalid experiment configuration (reported before any work starts)."""


def parse_h(v):
    """``0.1``, ``"1/10"`` -> float."""
    try:
        val = float(Fraction(str(v).strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"bad mesh size {v!r}") from None
    if val <= 0:
        raise ConfigError(f"mesh size must be positive (got {v!r})")
    return val


@dataclass
class ExperimentConfig:
    experiment: str = "convergence"
    dim: int = 2
    domain: tuple = None
    hs: list = None
    ms: list = None
    thetas: list = None
    mu: float = 15.0
    thresholds: dict = field(default_factory=dict)
    problem: str = None
    preconds: list = None
    restart: int = 100
    tol: float = 1e-8
    maxit: int = 5000
    mesh_files: list = field(default_factory=list)
    out: str = "rda-out"
    dense_cond_limit: int = 6000
    svg: bool = False
    direct_limit: int = 20000
    solve_tol: float = 1e-10
    mg_coarse: str = "rediscretize"
    dump_recon: bool = False
    dump_matrix: bool = False
    deterministic: bool = False
    allow_fallback: bool = False

    def resolved(self):
        """Fill experiment defaults and validate every field."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS} (got {self.experiment!r})")
        dim = int(self.dim)
        if dim not in (2, 3):
            raise ConfigError("dim must be 2 or 3")
        if self.mesh_files and dim != 2:
            raise ConfigError("polygonal mesh files are two-dimensional")
        d = _DEFAULTS[(self.experiment, dim)]
        problem = self.problem or ("example5" if self.mesh_files else d["problem"])
        try:
            prob = get_problem(problem, dim=dim)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        domain = tuple(tuple(map(float, p)) for p in (self.domain or prob.domain))
        if len(domain) != dim:
            raise ConfigError(f"domain needs {dim} intervals")
        hs = [parse_h(h) for h in (self.hs or d["hs"])] if not self.mesh_files else []
        if hs:
            for h in hs:
                for lo, hi in domain:
                    n = (hi - lo) / h
                    if abs(n - round(n)) > 1e-8 * n:
                        raise ConfigError(f"h={h:g} does not divide the domain side {hi - lo:g}")
            if hs != sorted(hs, reverse=True) or len(set(hs)) != len(hs):
                raise ConfigError("h-list must be strictly decreasing")
        ms = [int(m) for m in (self.ms or d["ms"])]
        for m in ms:
            lo = 0 if self.experiment == "condition" else 1
            if not lo <= m <= MAX_DEGREE[dim]:
                raise ConfigError(f"m={m} outside {lo}..{MAX_DEGREE[dim]} for dim={dim}")
        thetas = [int(t) for t in (self.thetas or ([-1] if self.experiment in
                                                    ("convergence", "dg-compare") else [-1, 1]))]
        if any(t not in (-1, 1) for t in thetas):
            raise ConfigError("theta must be -1 or 1")
        if not float(self.mu) > 0:
            raise ConfigError("mu must be positive")
        preconds = list(self.preconds or (["a0-mg", "jacobi", "ilu0"]))
        bad = [p for p in preconds if p not in PRECONDITIONERS]
        if bad:
            raise ConfigError(f"unknown preconditioner(s) {bad}; choose from {PRECONDITIONERS}")
        if self.mg_coarse not in ("rediscretize", "galerkin"):
            raise ConfigError("mg_coarse must be 'rediscretize' or 'galerkin'")
        for f in self.mesh_files:
            if not os.path.isfile(f):
                raise ConfigError(f"mesh file not found: {f}")
        thresholds = {int(k): int(v) for k, v in (self.thresholds or {}).items()}
        kind = "poly" if self.mesh_files else ("tri" if dim == 2 else "tet")
        for m in ms:
            if m > 0 and m not in thresholds:
                try:
                    thresholds[m] = default_threshold(m, dim, kind)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from None
        for name in ("restart", "maxit", "dense_cond_limit", "direct_limit"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for name in ("tol", "solve_tol"):
            if not 0 < float(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must lie in (0, 1)")
        return replace(self, dim=dim, domain=domain, hs=hs, ms=ms, thetas=thetas, mu=float(self.mu),
                       thresholds=thresholds, problem=problem, preconds=preconds,
                       restart=int(self.restart), maxit=int(self.maxit), tol=float(self.tol))

    def to_dict(self):
        return asdict(self)


@dataclass
class Level:
    """One mesh of an experiment; ``hierarchy`` is the nested family (coarsest first)."""

    h: float
    mesh: object
    hierarchy: list = None

    @property
    def nested(self):
        return self.hierarchy is not None


def mesh_levels(cfg):
    if cfg.mesh_files:
        levels = []
        for path in cfg.mesh_files:
            mesh = import_poly_mesh(path)
            levels.append(Level(h=float(mesh.diameters.max()), mesh=mesh))
        return sorted(levels, key=lambda lv: -lv.h)
    out = []
    side = cfg.domain[0][1] - cfg.domain[0][0]
    for h in cfg.hs:
        n = int(round(side / h))
        meshes = structured_hierarchy(cfg.domain, n, dim=cfg.dim)
        out.append(Level(h=h, mesh=meshes[-1], hierarchy=meshes))
    return out


def _stamp(cfg, seconds):
    return 0.0 if cfg.deterministic else seconds


def _operator(cfg, mesh, m):
    return build_operator(mesh, build_patches(mesh, cfg.thresholds[m]), m,
                          allow_fallback=cfg.allow_fallback)


def _dump(cfg, tag, op=None, system=None):
    if cfg.dump_recon and op is not None:
        write_matrix_market(os.path.join(cfg.out, f"recon_{tag}.mtx"), op.R)
    if cfg.dump_matrix and system is not None:
        write_matrix_market(os.path.join(cfg.out, f"matrix_{tag}.mtx"), system.A_mat)
        np.savetxt(os.path.join(cfg.out, f"rhs_{tag}.txt"), system.b, fmt="%.17g")


def solve_rda(cfg, level, system):
    """Direct solve up to ``direct_limit`` unknowns, else GMRES with the A0 preconditioner."""
    n = system.n
    if n <= cfg.direct_limit:
        return spsolve(system.A_mat.tocsc(), system.b), 0
    if level.nested:
        M = make_preconditioner("a0-mg", hierarchy=build_mg(level.hierarchy, coarse=cfg.mg_coarse))
    else:
        M = make_preconditioner("a0-direct", A0=assemble_a0(level.mesh).A_mat)
    x, st = gmres(system.A_mat, system.b, M, restart=cfg.restart, tol=cfg.solve_tol,
                  maxit=cfg.maxit)
    if not st.converged:
        raise RuntimeError(f"GMRES did not reach {cfg.solve_tol:g} (relres {st.relres:.3g})")
    return x, st.iterations


def run_convergence(cfg):
    """Errors of the RDA solution per (m, h); returns ``{m: ConvergenceReport}``."""
    cfg = cfg.resolved()
    os.makedirs(cfg.out, exist_ok=True)
    prob = get_problem(cfg.problem, theta=cfg.thetas[0], mu=cfg.mu, dim=cfg.dim)
    levels = mesh_levels(cfg)
    reports = {}
    for m in cfg.ms:
        rep = ConvergenceReport(label=f"m={m}", m=m)
        for lv in levels:
            t0 = time.perf_counter()
            op = _operator(cfg, lv.mesh, m)
            system = assemble_rda(lv.mesh, op, prob)
            _dump(cfg, f"m{m}_ne{lv.mesh.n_elements}", op, system)
            x, iters = solve_rda(cfg, lv, system)
            del system
            err = error_norms(BrokenSpace(lv.mesh, m), op, x, prob)
            rep.add(h=lv.h, n_e=lv.mesh.n_elements, dofs=lv.mesh.n_elements, iters=iters,
                    seconds=_stamp(cfg, time.perf_counter() - t0), **err)
        reports[m] = rep
        write_csv(rep, os.path.join(cfg.out, f"convergence_m{m}.csv"))
    _write_orders(cfg, reports, "orders.csv")
    if cfg.svg:
        write_svg({f"m={m}": (r.column("dofs"), r.column("l2")) for m, r in reports.items()},
                  os.path.join(cfg.out, "convergence.svg"), title=f"{cfg.problem}: L2 error")
    write_manifest(cfg)
    return reports


def _write_orders(cfg, reports, name):
    with open(os.path.join(cfg.out, name), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "l2_order", "energy_order", "energy_tilde_order"])
        for m, rep in reports.items():
            o = rep.orders()
            w.writerow([m] + [f"{o[c]:.4f}" if o else "" for c in ("l2", "energy", "energy_tilde")])


def dof_ratio(rda, dg):
    """Geometric-mean ratio ``dofs_RDA / dofs_DG`` at equal L2 error.

    DG dofs at the RDA error levels come from piecewise-linear interpolation
    of ``log dofs`` against ``log error``; RDA points outside the DG error
    range use the least-squares line through the DG points.
    """
    ed, nd = np.log(dg.column("l2")), np.log(dg.column("dofs"))
    er, nr = np.log(rda.column("l2")), np.log(rda.column("dofs"))
    order = np.argsort(ed)
    slope, icpt = np.polyfit(ed, nd, 1)
    logs = []
    for e, n in zip(er, nr):
        if ed.min() <= e <= ed.max():
            n_dg = np.interp(e, ed[order], nd[order])
        else:
            n_dg = slope * e + icpt
        logs.append(n - n_dg)
    return float(np.exp(np.mean(logs)))


def run_dg_compare(cfg):
    """RDA and standard DG on the same meshes; returns ``{m: (rda, dg, ratio)}``."""
    cfg = cfg.resolved()
    os.makedirs(cfg.out, exist_ok=True)
    prob = get_problem(cfg.problem, theta=cfg.thetas[0], mu=cfg.mu, dim=cfg.dim)
    levels = mesh_levels(cfg)
    result = {}
    for m in cfg.ms:
        rda = ConvergenceReport(label=f"RDA m={m}", m=m)
        dg = ConvergenceReport(label=f"DG m={m}", m=m)
        for lv in levels:
            t0 = time.perf_counter()
            op = _operator(cfg, lv.mesh, m)
            system = assemble_rda(lv.mesh, op, prob)
            x, iters = solve_rda(cfg, lv, system)
            err = error_norms(BrokenSpace(lv.mesh, m), op, x, prob)
            rda.add(h=lv.h, n_e=lv.mesh.n_elements, dofs=lv.mesh.n_elements, iters=iters,
                    seconds=_stamp(cfg, time.perf_counter() - t0), **err)
            t0 = time.perf_counter()
            space = BrokenSpace(lv.mesh, m)
            dsys = assemble_dg(space, prob)
            c = spsolve(dsys.A_mat.tocsc(), dsys.b)
            err = error_norms(space, None, c, prob)
            dg.add(h=lv.h, n_e=lv.mesh.n_elements, dofs=space.n_dof, iters=0,
                   seconds=_stamp(cfg, time.perf_counter() - t0), **err)
        ratio = dof_ratio(rda, dg)
        result[m] = (rda, dg, ratio)
        write_csv(rda, os.path.join(cfg.out, f"dg_compare_m{m}_rda.csv"))
        write_csv(dg, os.path.join(cfg.out, f"dg_compare_m{m}_dg.csv"))
    with open(os.path.join(cfg.out, "dof_ratio.csv"), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "dim_P", "ratio_rda_over_dg"])
        for m, (_, _, ratio) in result.items():
            w.writerow([m, dim_poly(m, cfg.dim), f"{ratio:.4f}"])
    if cfg.svg:
        series = {}
        for m, (r, d, _) in result.items():
            series[f"RDA m={m}"] = (r.column("dofs"), r.column("l2"))
            series[f"DG m={m}"] = (d.column("dofs"), d.column("l2"))
        write_svg(series, os.path.join(cfg.out, "dg_compare.svg"), title="L2 error against dofs")
    write_manifest(cfg)
    return result


def run_condition(cfg):
    """Dense condition numbers of ``A`` and ``A0^{-1} A`` per (m, h, theta)."""
    cfg = cfg.resolved()
    os.makedirs(cfg.out, exist_ok=True)
    levels = mesh_levels(cfg)
    for lv in levels:
        if lv.mesh.n_elements > cfg.dense_cond_limit:
            raise ConfigError(f"mesh with {lv.mesh.n_elements} elements exceeds "
                              f"dense_cond_limit={cfg.dense_cond_limit}")
    rows = []
    prev = {}
    for lv in levels:
        A0 = assemble_a0(lv.mesh).A_mat
        for m in cfg.ms:
            op = _operator(cfg, lv.mesh, m) if m > 0 else None
            for theta in cfg.thetas:
                if m == 0:
                    A = cfg.mu * A0
                else:
                    prob = get_problem(cfg.problem, theta=theta, mu=cfg.mu, dim=cfg.dim)
                    A = assemble_rda(lv.mesh, op, prob).A_mat
                k_plain = condition_estimate(A, limit=cfg.dense_cond_limit)
                k_pre = condition_estimate(A, A0, limit=cfg.dense_cond_limit)
                key = (m, theta)
                p = prev.get(key)
                rows.append(dict(m=m, h=lv.h, theta=theta, n=A.shape[0], kappa=k_plain,
                                 kappa_pre=k_pre,
                                 ratio=k_plain / p[0] if p else float("nan"),
                                 ratio_pre=k_pre / p[1] if p else float("nan")))
                prev[key] = (k_plain, k_pre)
    rows.sort(key=lambda r: (r["m"], r["theta"], -r["h"]))
    _write_rows(os.path.join(cfg.out, "condition.csv"), rows)
    write_manifest(cfg)
    return rows


def _write_rows(path, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if not rows:
            return
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in r.items()})


def run_precond_bench(cfg):
    """GMRES iterations per (m, h, theta, preconditioner); non-convergence is recorded."""
    cfg = cfg.resolved()
    os.makedirs(cfg.out, exist_ok=True)
    levels = mesh_levels(cfg)
    rows = []
    for lv in levels:
        A0 = assemble_a0(lv.mesh).A_mat
        hier = build_mg(lv.hierarchy, coarse=cfg.mg_coarse) if lv.nested else None
        for m in cfg.ms:
            op = _operator(cfg, lv.mesh, m)
            for theta in cfg.thetas:
                prob = get_problem(cfg.problem, theta=theta, mu=cfg.mu, dim=cfg.dim)
                system = assemble_rda(lv.mesh, op, prob)
                _dump(cfg, f"m{m}_ne{lv.mesh.n_elements}_theta{theta:+d}", None, system)
                for name in cfg.preconds:
                    rows.append(_bench_one(cfg, lv, system, name, A0, hier, m, theta))
                del system
    _write_rows(os.path.join(cfg.out, "precond_bench.csv"), rows)
    _write_bench_table(cfg, rows)
    write_manifest(cfg)
    return rows


def _bench_one(cfg, lv, system, name, A0, hier, m, theta):
    used = name
    if name == "a0-mg" and hier is None:
        used = "a0-direct"
    row = dict(m=m, h=lv.h, theta=theta, precond=name, used=used, n=system.n, iters=-1,
               converged=False, relres=float("nan"), setup_seconds=0.0, solve_seconds=0.0,
               error="")
    t0 = time.perf_counter()
    try:
        M = make_preconditioner(used, A=system.A_mat, A0=A0, hierarchy=hier)
        row["setup_seconds"] = _stamp(cfg, time.perf_counter() - t0)
        _, st = gmres(system.A_mat, system.b, M, restart=cfg.restart, tol=cfg.tol,
                      maxit=cfg.maxit)
        row.update(iters=st.iterations, converged=st.converged, relres=st.relres,
                   solve_seconds=_stamp(cfg, st.seconds))
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _write_bench_table(cfg, rows):
    """Wide layout: one line per (m, preconditioner), columns per (theta, 1/h)."""
    hs = sorted({r["h"] for r in rows}, reverse=True)
    cols = [(t, h) for t in cfg.thetas for h in hs]
    with open(os.path.join(cfg.out, "precond_table.csv"), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "precond"] + [f"theta={t:+d} 1/h={1 / h:g}" for t, h in cols])
        for m in cfg.ms:
            for p in cfg.preconds:
                cells = []
                for t, h in cols:
                    hit = [r for r in rows if r["m"] == m and r["precond"] == p
                           and r["theta"] == t and r["h"] == h]
                    if not hit or hit[0]["iters"] < 0:
                        cells.append("fail")
                    else:
                        r = hit[0]
                        cells.append(str(r["iters"]) + ("" if r["converged"] else "+"))
                w.writerow([m, p] + cells)


def version_string():
    from . import __version__

    sha = ""
    try:
        import subprocess

        here = os.path.dirname(os.path.abspath(__file__))
        sha = subprocess.run(["git", "describe", "--always", "--dirty"], cwd=here,
                             capture_output=True, text=True, timeout=5).stdout.strip()
    except (OSError, ValueError, subprocess.SubprocessError):
        sha = ""
    return f"{__version__}-g{sha}" if sha else __version__


def write_manifest(cfg):
    import json

    from .solve import BACKEND

    data = {"config": cfg.to_dict(), "version": version_string(), "kernel_backend": BACKEND,
            "mesh_convention": MESH_NOTE if not cfg.mesh_files else "imported polygonal meshes; "
            "h column is the largest element diameter",
            "problems": problem_names()}
    with open(os.path.join(cfg.out, f"manifest_{cfg.experiment}.json"), "w",
              encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, default=str)
        fh.write("\n")


RUNNERS = {"convergence": run_convergence, "dg-compare": run_dg_compare,
           "condition": run_condition, "precond-bench": run_precond_bench}


def run(cfg):
    return RUNNERS[cfg.experiment](cfg)


__all__ = ["ConfigError", "EXPERIMENTS", "ExperimentConfig", "Level", "dof_ratio", "fit_order",
           "mesh_levels", "run", "run_condition", "run_convergence", "run_dg_compare",
           "run_precond_bench", "solve_rda"]
