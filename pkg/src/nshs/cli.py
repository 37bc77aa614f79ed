"""Command-line interface: ``nshs <subcommand> --config PATH [--set k=v]... --out DIR``.

Exit codes: 0 success, 2 a verification failed, 1 error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import os
import shutil
import sys
import tempfile

import numpy as np

from .config import parse_config, serialize_config
from .field import ConfigError

__all__ = ["main", "emit_outputs", "DATUMS"]

MANIFEST = "manifest.json"


def _datums():
    from . import solvers

    return {
        "bump": solvers.bump_datum,
        "maekawa": solvers.maekawa_datum,
        "analytic": solvers.analytic_datum,
        "kato": solvers.kato_datum,
    }


DATUMS = ("bump", "maekawa", "analytic", "kato")


def emit_outputs(artifacts, output_dir):
    """Write ``{relative name: bytes | str}`` and a sha256 manifest.

    Files are staged in a temporary directory inside ``output_dir`` and moved
    into place only when every write succeeded.  Returns the manifest dict.
    """
    os.makedirs(output_dir, exist_ok=True)
    stage = tempfile.mkdtemp(prefix=".nshs-stage-", dir=output_dir)
    entries = []
    try:
        for name in sorted(artifacts):
            data = artifacts[name]
            if isinstance(data, str):
                data = data.encode("utf-8")
            if os.path.isabs(name) or ".." in name.split("/"):
                raise ValueError(f"artifact name {name!r} must be a relative path")
            path = os.path.join(stage, name)
            os.makedirs(os.path.dirname(path), exist_ok=True)
            with open(path, "wb") as fh:
                fh.write(data)
            entries.append({"path": name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
        manifest = {"schema": "nshs.manifest", "version": 1, "artifacts": entries}
        text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        with open(os.path.join(stage, MANIFEST), "w", encoding="utf-8") as fh:
            fh.write(text)
        for name in [e["path"] for e in entries] + [MANIFEST]:
            dst = os.path.join(output_dir, name)
            os.makedirs(os.path.dirname(dst), exist_ok=True)
            os.replace(os.path.join(stage, name), dst)
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    return manifest


def verify_manifest(output_dir):
    """True when every listed file exists and matches its hash."""
    with open(os.path.join(output_dir, MANIFEST), encoding="utf-8") as fh:
        manifest = json.load(fh)
    for e in manifest["artifacts"]:
        with open(os.path.join(output_dir, e["path"]), "rb") as fh:
            if hashlib.sha256(fh.read()).hexdigest() != e["sha256"]:
                return False
    return True


def _diag_csv(traj):
    d = traj.diagnostics
    keys = ["time", "energy", "enstrophy", "compat", "slip"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys)
    for row in zip(*(d[k] for k in keys)):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _norm_json(reports):
    return json.dumps([r.to_dict() for r in reports], indent=1, sort_keys=True)


def _run_payload(cfg, traj):
    from .solvers import checkpoint_bytes

    return {
        "config.ini": serialize_config(cfg),
        "diagnostics.csv": _diag_csv(traj),
        "checkpoint.nshs": checkpoint_bytes(traj),
        "run.json": json.dumps(
            {"solver": traj.solver_kind, "failure": traj.failure, "snapshots": len(traj.snapshots),
             "final_time": float(traj.times[-1])}, indent=1, sort_keys=True),
    }


def cmd_simulate(args, cfg):
    from .harness import norm_history
    from .solvers import run, validate_initial_data

    datum = _datums()[args.datum](cfg)
    traj = run(cfg, datum, args.solver)
    artifacts = _run_payload(cfg, traj)
    report = validate_initial_data(datum, cfg)
    artifacts["datum.json"] = json.dumps(report, indent=1, sort_keys=True)
    if args.norms and traj.ok:
        h = norm_history(traj)
        artifacts["norms.json"] = _norm_json(h.reports)
    emit_outputs(artifacts, args.out)
    print(f"{args.solver}: {len(traj.snapshots)} snapshots to t={traj.times[-1]:g}"
          + ("" if traj.ok else f"; FAILED {traj.failure}"))
    return 0 if traj.ok else 1


def cmd_euler(args, cfg):
    from .solvers import run

    datum = _datums()[args.datum](cfg)
    traj = run(cfg, datum, "euler")
    artifacts = _run_payload(cfg, traj)
    emit_outputs(artifacts, args.out)
    d = traj.diagnostics
    de = abs(d["energy"][-1] - d["energy"][0]) / d["energy"][0] if d["energy"][0] else 0.0
    dz = abs(d["enstrophy"][-1] - d["enstrophy"][0]) / d["enstrophy"][0] if d["enstrophy"][0] else 0.0
    print(f"euler: energy drift {de:.2e}, enstrophy drift {dz:.2e}")
    if not traj.ok:
        print(f"FAILED {traj.failure}")
        return 1
    return 0


def cmd_converge(args, cfg):
    from .harness import run_convergence

    nus = [float(v) for v in args.nus.split(",")]
    table = run_convergence(cfg, nus, datum=_datums()[args.datum], solver_kind=args.solver)
    emit_outputs({"convergence.csv": table.to_csv(), "convergence.json": table.to_json(indent=1)}, args.out)
    dist = table.column("sup_dist") if table.rows else np.array([])
    monotone = bool(len(dist) >= 3 and np.all(np.diff(dist) < 0))
    print(f"rows={len(table.rows)} slope={table.slope:.3f} dissipation_slope={table.dissipation_slope:.3f} "
          f"monotone={monotone}")
    return 0 if monotone else 2


def _emit_reports(reports, out):
    from .verify import reports_to_csv

    arts = {f"{r.name}.json": r.to_json(indent=1) for r in reports}
    arts["summary.csv"] = reports_to_csv(reports)
    emit_outputs(arts, out)
    for r in reports:
        print(f"{r.name}: {'pass' if r.passed else 'FAIL'} (C={r.fitted_constant:.4g})")
    return 0 if all(r.passed for r in reports) else 2


def cmd_verify_kernels(args, cfg):
    from .verify import check_kernel_bounds

    return _emit_reports([check_kernel_bounds()], args.out)


def cmd_verify_inequalities(args, cfg):
    from .solvers import bump_datum, run
    from .verify import (
        check_int_t,
        check_nonlinear_estimates,
        check_recovery,
        check_sobolev_gronwall,
        check_weight_properties,
        random_state,
    )

    reports = [check_int_t(), check_recovery(seed=cfg.seed), check_weight_properties(),
               check_nonlinear_estimates(random_state(cfg, seed=cfg.seed))]
    traj = run(cfg, bump_datum(cfg), "mild")
    if traj.ok:
        reports.append(check_sobolev_gronwall(traj))
    return _emit_reports(reports, args.out)


def cmd_norms(args, cfg):
    from .norms import triple_norm
    from .solvers import read_checkpoint, validate_initial_data

    if args.checkpoint:
        traj = read_checkpoint(args.checkpoint)
        states = traj.snapshots
        cfg = traj.config
    else:
        states = [_datums()[args.datum](cfg)]
    reports = [triple_norm(s) for s in states]
    arts = {"norms.json": _norm_json(reports)}
    if not args.checkpoint:
        arts["datum.json"] = json.dumps(validate_initial_data(states[0], cfg), indent=1, sort_keys=True)
    emit_outputs(arts, args.out)
    for r in reports:
        print(f"t={r.time:g} X={r.x_t:.6g} Y={r.y_t:.6g} Z={r.z:.6g} triple={r.triple:.6g}")
    return 0


def cmd_inspect(args, cfg):
    from .biot_savart import compatibility
    from .solvers import read_checkpoint

    if not args.checkpoint:
        raise ConfigError("inspect needs --checkpoint")
    traj = read_checkpoint(args.checkpoint)
    snaps = [
        {"time": s.time, "K": s.K, "max_abs": float(np.abs(s.values).max()),
         "symmetry_error": s.symmetry_error(),
         "max_compat": float(np.abs(compatibility(s)).max())}
        for s in traj.snapshots
    ]
    summary = {"solver": traj.solver_kind, "n": traj.grid.n, "config": dataclasses.asdict(traj.config),
               "snapshots": snaps}
    emit_outputs({"inspect.json": json.dumps(summary, indent=1, sort_keys=True)}, args.out)
    print(f"{traj.solver_kind}: {len(snaps)} snapshots, n={traj.grid.n}, K={snaps[0]['K']}, "
          f"t in [{snaps[0]['time']:g}, {snaps[-1]['time']:g}]")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "euler": cmd_euler,
    "converge": cmd_converge,
    "verify-kernels": cmd_verify_kernels,
    "verify-inequalities": cmd_verify_inequalities,
    "norms": cmd_norms,
    "inspect": cmd_inspect,
}


def build_parser():
    p = argparse.ArgumentParser(prog="nshs", description="Half-plane Navier-Stokes vorticity lab")
    p.add_argument("subcommand", choices=sorted(COMMANDS))
    p.add_argument("--config", default=None, help="INI file with [physics] [numerics] [norms] [io]")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out", default="nshs-out", help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--solver", choices=("mild", "direct"), default="mild")
    p.add_argument("--datum", choices=DATUMS, default="bump")
    p.add_argument("--nus", default="4e-3,2e-3,1e-3,5e-4", help="comma-separated decreasing viscosities")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--norms", action="store_true", help="also write the triple-norm history")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        overrides = list(args.overrides)
        if args.seed is not None:
            overrides.append(f"seed={args.seed}")
        cfg = parse_config(args.config, overrides)
        return COMMANDS[args.subcommand](args, cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - top-level reporting
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
