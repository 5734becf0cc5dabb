"""Command-line driver: ``rda --experiment convergence --m 1,2 --h 1/10,1/20``.

Settings come from an optional ``key = value`` config file and are
overridden by flags.
"""
import argparse
import sys

from .experiments import (
    EXPERIMENTS,
    ConfigError,
    ExperimentConfig,
    run,
    run_condition,
    run_convergence,
    run_dg_compare,
    run_precond_bench,
)
from .recon import UnisolvenceError


def _ints(s):
    return [int(v) for v in _split(s)]


def _split(s):
    return [v for v in str(s).replace(";", ",").split(",") if v.strip()]


def _strs(s):
    return [v.strip() for v in _split(s)]


def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _thresholds(s):
    """``"21"`` (all degrees) or ``"1:8,2:10"``."""
    items = _split(s)
    if len(items) == 1 and ":" not in items[0]:
        return {"*": int(items[0])}
    out = {}
    for it in items:
        k, _, v = it.partition(":")
        out[int(k)] = int(v)
    return out


def _domain(s):
    vals = [float(v) for v in _split(s)]
    if len(vals) % 2:
        raise ConfigError("domain needs lo,hi pairs")
    return tuple((vals[i], vals[i + 1]) for i in range(0, len(vals), 2))


# config key -> (ExperimentConfig field, converter)
KEYS = {
    "experiment": ("experiment", str),
    "dim": ("dim", int),
    "domain": ("domain", _domain),
    "h": ("hs", _strs),
    "m": ("ms", _ints),
    "theta": ("thetas", _ints),
    "mu": ("mu", float),
    "patch_threshold": ("thresholds", _thresholds),
    "problem": ("problem", str),
    "precond": ("preconds", _strs),
    "restart": ("restart", int),
    "tol": ("tol", float),
    "solve_tol": ("solve_tol", float),
    "maxit": ("maxit", int),
    "mesh_file": ("mesh_files", _strs),
    "out": ("out", str),
    "dense_cond_limit": ("dense_cond_limit", int),
    "direct_limit": ("direct_limit", int),
    "svg": ("svg", _bool),
    "mg_coarse": ("mg_coarse", str),
    "dump_recon": ("dump_recon", _bool),
    "dump_matrix": ("dump_matrix", _bool),
    "deterministic": ("deterministic", _bool),
    "allow_fallback": ("allow_fallback", _bool),
}


def read_config(path):
    """Parse a flat ``key = value`` file (``#`` starts a comment)."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if not sep or key not in KEYS:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value' with a known key")
            out[key] = value.strip()
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="rda", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="key = value settings file (flags override it)")
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--dim", help="2 or 3")
    p.add_argument("--domain", help="lo,hi pairs, e.g. -1,1,-1,1")
    p.add_argument("--h", help="mesh sizes, e.g. 1/10,1/20 (grid spacing)")
    p.add_argument("--m", help="degrees, e.g. 1,2,3")
    p.add_argument("--theta", help="-1 (symmetric) and/or 1 (nonsymmetric)")
    p.add_argument("--mu", help="penalty parameter (default 15)")
    p.add_argument("--problem", help="example1|example2|example4|example5|example6|example7|"
                                     "manufactured:<k>")
    p.add_argument("--precond", help="comma list of a0-mg,a0-direct,jacobi,ilu0,none")
    p.add_argument("--patch-threshold", help="N for every degree, or m:N pairs")
    p.add_argument("--mesh-file", help="polygonal mesh file(s), comma separated")
    p.add_argument("--out", help="output directory")
    p.add_argument("--restart", help="GMRES restart length (default 100)")
    p.add_argument("--tol", help="GMRES relative residual tolerance (default 1e-8)")
    p.add_argument("--solve-tol", help="tolerance for iterative solves in error studies")
    p.add_argument("--maxit", help="GMRES iteration cap")
    p.add_argument("--dense-cond-limit", help="largest matrix for dense condition numbers")
    p.add_argument("--direct-limit", help="largest system solved directly in error studies")
    p.add_argument("--mg-coarse", choices=("rediscretize", "galerkin"))
    p.add_argument("--svg", action="store_const", const="true", help="also write SVG plots")
    p.add_argument("--dump-recon", action="store_const", const="true",
                   help="write reconstruction matrices (Matrix Market)")
    p.add_argument("--dump-matrix", action="store_const", const="true",
                   help="write assembled systems (Matrix Market)")
    p.add_argument("--deterministic", action="store_const", const="true",
                   help="write zero timings so outputs are reproducible bit for bit")
    p.add_argument("--allow-fallback", action="store_const", const="true",
                   help="warn instead of stopping on a non-unisolvent patch "
                        "(minimum-norm fit is used there)")
    return p


def _join_negative_values(argv):
    """Rewrite ``--opt -1,1`` as ``--opt=-1,1``; argparse reads ``-1,1`` as an option."""
    out = []
    for arg in argv:
        if (out and out[-1].startswith("--") and "=" not in out[-1] and len(arg) > 1
                and arg[0] == "-" and (arg[1].isdigit() or arg[1] == ".")):
            out[-1] = f"{out[-1]}={arg}"
        else:
            out.append(arg)
    return out


def config_from_args(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    raw = read_config(args.config) if args.config else {}
    for key in KEYS:
        v = getattr(args, key, None)
        if v is not None:
            raw[key] = v
    kw = {}
    for key, value in raw.items():
        field, conv = KEYS[key]
        try:
            kw[field] = conv(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
    thr = kw.get("thresholds")
    if thr and "*" in thr:
        common = thr.pop("*")
        ms = kw.get("ms") or [1, 2, 3, 4]
        kw["thresholds"] = {m: common for m in ms}
    return ExperimentConfig(**kw).resolved()


def _summary(cfg, result):
    if cfg.experiment == "convergence":
        for m, rep in result.items():
            o = rep.orders()
            tail = "  ".join(f"{k}={v:.2f}" for k, v in o.items()) if o else "(< 3 levels)"
            print(f"m={m}: {tail}")
    elif cfg.experiment == "dg-compare":
        for m, (_, _, ratio) in result.items():
            print(f"m={m}: dofs(RDA)/dofs(DG) at equal L2 error = {ratio:.0%}")
    elif cfg.experiment == "condition":
        for r in result:
            print(f"m={r['m']} theta={r['theta']:+d} h={r['h']:g}: kappa={r['kappa']:.4g} "
                  f"kappa(A0^-1 A)={r['kappa_pre']:.4g}")
    else:
        for r in result:
            flag = "" if r["converged"] else " (not converged)"
            print(f"m={r['m']} theta={r['theta']:+d} h={r['h']:g} {r['precond']}: "
                  f"{r['iters']}{flag}")
    print(f"results in {cfg.out}")


def main(argv=None):
    try:
        cfg = config_from_args(argv)
    except (ConfigError, OSError) as exc:
        print(f"rda: error: {exc}", file=sys.stderr)
        return 2
    try:
        result = run(cfg)
    except UnisolvenceError as exc:
        print(f"rda: error: {exc} (use --allow-fallback or a larger --patch-threshold)",
              file=sys.stderr)
        return 1
    _summary(cfg, result)
    return 0


if __name__ == "__main__":
    sys.exit(main())

__all__ = ["build_parser", "config_from_args", "main", "read_config", "run_condition",
           "run_convergence", "run_dg_compare", "run_precond_bench"]
