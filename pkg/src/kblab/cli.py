"""Command-line front end: ``kblab simulate | verify | norms | decompose``.

Exit status: 0 success, 1 failed checks, 2 invalid input (config, field
header, unknown inequality id), 3 solver divergence.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._threads import requested_threads, thread_scope
from .config import ConfigError, RunConfig

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_DIVERGED = 0, 1, 2, 3


class UsageError(Exception):
    """Bad user input that maps to exit status 2."""


def _versions() -> dict:
    import numba
    import scipy
    import sklearn
    return {"kblab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "scikit-learn": sklearn.__version__,
            "python": ".".join(platform.python_version_tuple()[:2])}


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _write(out: Path, name: str, text: str | bytes, artifacts: dict) -> None:
    data = text.encode() if isinstance(text, str) else text
    (out / name).write_bytes(data)
    artifacts[name] = _sha256(data)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _finite(x: float):
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def _load_config(path, seed=None, trials=None) -> RunConfig:
    cfg = RunConfig.from_dict({"version": "1"}) if path is None else RunConfig.load(path)
    return cfg.with_seed(seed).with_trials(trials)


def _out_dir(arg, default) -> Path:
    out = Path(arg if arg is not None else default)
    out.mkdir(parents=True, exist_ok=True)
    return out


# simulate --------------------------------------------------------------------
def cmd_simulate(args) -> int:
    from .io import FieldFile
    from .lp import build_dyadic_system
    from .norms import DistributionTrajectory
    from .solver import SolverDivergence, diagnose, direct_solve, initial_data, picard_solve

    cfg = _load_config(args.config, args.seed)
    out = _out_dir(args.out, cfg.data["output"])
    s = cfg.data["solver"]
    grid, tables = cfg.fourier_grid(), cfg.tables()
    dsys = build_dyadic_system(grid)
    scfg = cfg.solver_config()
    kw = {} if s["initial"] == "cosine" else {"k_max": float(s["k_max"]), "decay": float(s["spectral_decay"]),
                                               "degree": s["velocity_degree"]}
    f0 = initial_data(s["initial"], grid, tables.vgrid, scfg.amplitude, cfg.seed, sys=dsys, **kw)
    manifest = {"command": "simulate", "config": cfg.data, "config_hash": cfg.digest, "seed": cfg.seed,
                "versions": _versions(), "clipped_fraction": tables.clipped_fraction}
    artifacts: dict = {}
    try:
        if s["method"] == "direct":
            traj, diag = direct_solve(f0, tables, scfg, dsys)
        else:
            state = picard_solve(f0, tables, scfg, dsys)
            traj = DistributionTrajectory(state.times, state.trajectory_curr, grid, tables.vgrid)
            diag = diagnose(traj, tables, scfg, dsys)
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(("sweep", "Y_tilde", "increment"))
            for n, (y, inc) in enumerate(zip(state.ytilde_history, state.increment_history), start=1):
                w.writerow((n, repr(float(y)), repr(float(inc))))
            _write(out, "picard.csv", buf.getvalue(), artifacts)
    except SolverDivergence as exc:
        manifest.update(status="diverged", message=str(exc), last_good_step=exc.step - 1,
                        last_good_time=(exc.step - 1) * scfg.dt, sweep=exc.sweep, artifacts=artifacts)
        _write(out, "manifest.json", _dump(manifest), {})
        print(f"error: {exc}; last good step {exc.step - 1}", file=sys.stderr)
        return EXIT_DIVERGED
    _write(out, "diagnostics.csv", diag.to_csv(), artifacts)
    if s["snapshots"]:
        _write(out, "trajectory.kbf", FieldFile(traj.values, grid, tables.vgrid, traj.times).to_bytes(), artifacts)
    manifest.update(status="ok", initial_norm=diag.initial_norm, final=diag.final().as_dict(), steps=scfg.n_steps,
                    artifacts=artifacts)
    _write(out, "manifest.json", _dump(manifest), {})
    print(f"simulate: {scfg.n_steps} steps, Y~_T={diag.final().Y_tilde_T:.6g}, artifacts in {out}")
    return EXIT_OK


# verify ----------------------------------------------------------------------
def cmd_verify(args) -> int:
    from .verify import REGISTRY, full_suite

    cfg = _load_config(args.config, args.seed, args.trials)
    only = None
    if args.only:
        only = [i.strip() for i in args.only.split(",") if i.strip()]
        unknown = [i for i in only if i not in REGISTRY]
        if unknown or not only:
            raise UsageError(f"unknown inequality id(s): {', '.join(unknown) or '<empty>'}; "
                             f"known ids: {', '.join(REGISTRY)}")
    out = _out_dir(args.out, cfg.data["output"])

    def progress(rep):
        drift = rep.refinement_drift
        print(f"{rep.inequality_id:16s} fitted={rep.fitted_C:.6g} drift={'-' if drift is None else f'{drift:.4g}'} "
              f"violations={rep.violations} {'PASS' if rep.passed else 'FAIL'}", flush=True)

    result = full_suite(cfg.trial_spec(), cfg.verify_grids(), only=only, refine=not args.no_refine,
                        progress=progress)
    for cid, rep in result.reports.items():
        (out / f"{cid}.csv").write_text(rep.to_csv())
    (out / "verify.json").write_text(result.to_json())
    print(f"verify: {'PASS' if result.passed else 'FAIL'} ({len(result.reports)} checks), bundle in {out}")
    return result.exit_status


# field commands --------------------------------------------------------------
def _read_field(path):
    from .io import FieldFile, FieldFormatError
    try:
        return FieldFile.read(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except FieldFormatError as exc:
        raise UsageError(f"corrupt field file {path}: {exc}") from None


def _block_table(ff, p: float, homogeneous: bool):
    """(indices, B[q, t?, xi?]) of the spectral content of a field file."""
    from .lp import build_dyadic_system
    from .norms import block_norms
    lead = 0 if ff.times is None else 1
    return block_norms(ff.coefficients(), ff.grid, p, lead=lead, sys=build_dyadic_system(ff.grid),
                       homogeneous=homogeneous)


def cmd_norms(args) -> int:
    from .collision import collision_frequency
    from .norms import (BesovSpec, CLSpec, DistributionTrajectory, block_weights, chemin_lerner_from_blocks,
                        classical_from_blocks, energy_functionals, weighted_lp)

    ff = _read_field(args.field)
    cfg = _load_config(args.config)
    spec = BesovSpec(args.s, args.p, args.r, args.homogeneous)
    idx, B = _block_table(ff, spec.p, spec.homogeneous)
    if ff.vgrid is not None:
        B = weighted_lp(B, ff.vgrid.weights, 2.0)  # L^2_xi of each block
    if ff.times is not None:
        B = B.max(axis=1)  # sup over stored times, per block
    weight = block_weights(idx, spec.s)
    contrib = weight * B
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("q", "block_norm", "weight", "contribution"))
    for row in zip(idx, B, weight, contrib):
        w.writerow((int(row[0]),) + tuple(repr(float(v)) for v in row[1:]))
    summary = {"field": {"shape": list(ff.array.shape), "dtype": ff.dtype_name,
                         "trajectory": ff.times is not None, "velocity": ff.vgrid is not None},
               "spec": {"s": spec.s, "p": _finite(spec.p), "r": _finite(spec.r), "homogeneous": spec.homogeneous},
               "besov": float(weighted_lp(contrib, None, spec.r))}
    if ff.times is not None and ff.vgrid is not None and ff.times.size > 1:
        traj = DistributionTrajectory(ff.times, ff.coefficients(), ff.grid, ff.vgrid)
        nu = collision_frequency(ff.vgrid, cfg.sphere(), cfg.kernel())
        summary["energy"] = energy_functionals(traj, nu).as_dict()
        idx2, B2 = _block_table(ff, spec.p, spec.homogeneous)  # (Q, n_t, N)
        mixed = {}
        for rho1 in (2.0, math.inf):
            cl = CLSpec(rho1, 2.0, spec)
            key = "inf" if math.isinf(rho1) else "2"
            mixed[f"chemin_lerner_rho1_{key}"] = chemin_lerner_from_blocks(idx2, B2, ff.times, ff.vgrid.weights, cl)
            mixed[f"classical_rho1_{key}"] = classical_from_blocks(idx2, B2, ff.times, ff.vgrid.weights, cl)
        summary["mixed"] = mixed
    out = _out_dir(args.out, ".")
    (out / "norms.csv").write_text(buf.getvalue())
    (out / "norms.json").write_text(_dump(summary))
    print(f"norms: besov={summary['besov']:.12g}, written to {out}")
    return EXIT_OK


def cmd_decompose(args) -> int:
    from .lp import build_dyadic_system
    ff = _read_field(args.field)
    coef = ff.coefficients()
    if ff.times is not None:
        if not -ff.times.size <= args.snapshot < ff.times.size:
            raise UsageError(f"snapshot index {args.snapshot} out of range for {ff.times.size} snapshots")
        coef = coef[args.snapshot]
    grid = ff.grid
    dsys = build_dyadic_system(grid)
    idx, mults = dsys.multipliers(args.homogeneous)
    xi_w = None if ff.vgrid is None else ff.vgrid.weights

    def inner(u, v) -> float:
        loc = grid.l2_inner(u, v)
        return float(np.sum(loc if xi_w is None else loc @ xi_w))

    total = math.sqrt(max(inner(coef, coef), 0.0))
    rows, recon = [], np.zeros_like(coef)
    for q, m in zip(idx, mults):
        block = coef * grid.expand(m, coef.ndim)
        recon = recon + block
        norm = math.sqrt(max(inner(block, block), 0.0))
        share = inner(block, coef) / total if total > 0 else 0.0
        rows.append((int(q), norm, 2.0 ** (args.s * q) * norm, share))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("q", "block_norm", "weighted", "reconstruction"))
    for q, *vals in rows:
        w.writerow([q] + [repr(float(v)) for v in vals])
    gap = math.sqrt(max(inner(recon - coef, recon - coef), 0.0))
    summary = {"s": args.s, "homogeneous": args.homogeneous, "norm": total,
               "reconstruction_sum": math.fsum(r[3] for r in rows),
               "reconstruction_error": gap / total if total > 0 else gap,
               "besov_b_s_2_1": math.fsum(r[2] for r in rows)}
    out = _out_dir(args.out, ".")
    (out / "decompose.csv").write_text(buf.getvalue())
    (out / "decompose.json").write_text(_dump(summary))
    print(f"decompose: {len(rows)} blocks, ||f||={total:.12g}, written to {out}")
    return EXIT_OK


# entry point -----------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kblab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"kblab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate from seeded initial data and log diagnostics")
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--out", help="output directory (default: config 'output')")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the inequality registry and write a report bundle")
    p.add_argument("--config", help="JSON run configuration (trial and verify sections)")
    p.add_argument("--only", help="comma-separated inequality ids")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--trials", type=int, help="override the number of trials")
    p.add_argument("--out", help="output directory (default: config 'output')")
    p.add_argument("--no-refine", action="store_true", help="skip the refined-grid rerun")
    p.set_defaults(func=cmd_verify)

    for name, func, helptext in (("norms", cmd_norms, "Besov block table and norm summary of a field file"),
                                 ("decompose", cmd_decompose, "dyadic decomposition of a field file")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("field", help="field file (JSON header + raw payload)")
        p.add_argument("--s", type=float, default=1.5, help="regularity index (default 1.5)")
        p.add_argument("--homogeneous", action="store_true", help="use homogeneous blocks")
        p.add_argument("--out", help="output directory (default: current directory)")
        p.set_defaults(func=func)
        if name == "norms":
            p.add_argument("--p", type=float, default=2.0, help="spatial Lebesgue exponent")
            p.add_argument("--r", type=float, default=1.0, help="block-sum exponent")
            p.add_argument("--config", help="JSON run configuration (kernel and sphere for nu)")
        else:
            p.add_argument("--snapshot", type=int, default=-1, help="snapshot index of a trajectory file")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        threads = requested_threads()
        with thread_scope(threads):
            return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
