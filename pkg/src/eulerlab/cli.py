"""Experiment harness: deterministic batch runs with CSV reports.

Subcommands cover the whole laboratory: `simulate` integrates a configured
system and persists the trajectory; `besov-fit`, `commutator-rate`,
`relentropy` and `oslip-check` run the estimate monitors on fields or
trajectory directories; `verify-thermo` checks the closure identities; and
`accept` executes the acceptance gates.  Configs are JSON, all numeric
output is CSV whose first line records the config hash and package version,
and re-running a subcommand with the same config reproduces byte-identical
data rows.  Exit codes: 0 pass, 1 fail, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, acceptance
from . import besov as bz
from . import commutator as cm
from . import conditions as cd
from . import relentropy as re_
from .errors import DomainError, RangeError, ResolutionError
from .grid import PeriodicGrid, ScalarField, load_scalar_field, weierstrass_field
from .solver import SolverConfig, Trajectory, project_trajectory, run, snapshot_primitive
from .thermo import GasParams, tilde_pressure_derivatives, verify_gibbs, verify_p2


class UsageError(Exception):
    pass


def _config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}")


def _field(cfg: dict, name: str, kind, default=None, required=False):
    if name not in cfg:
        if required:
            raise UsageError(f"config field {name!r} is required")
        return default
    value = cfg[name]
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise UsageError(f"config field {name!r} has invalid value {value!r}")


def _write_report(path: Path, header: list[str], rows: list[list], config_hash: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"# config_hash={config_hash} eulerlab={__version__}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    grid_n = args.grid_n or _field(cfg, "grid_n", int, 256)
    dims = _field(cfg, "dims", int, 1)
    gamma = args.gamma or _field(cfg, "gamma", float, 1.4)
    init = _field(cfg, "init", dict, {"name": "sod"})
    try:
        config = SolverConfig(
            grid=PeriodicGrid(dims, grid_n),
            params=GasParams(gamma),
            t_end=_field(cfg, "t_end", float, 0.2),
            system=_field(cfg, "system", str, "complete"),
            cfl=_field(cfg, "cfl", float, 0.4),
            init=init,
            snapshot_stride=_field(cfg, "snapshot_stride", float,
                                   _field(cfg, "t_end", float, 0.2) / 10.0),
        )
        traj = run(config)
    except (ValueError, DomainError) as exc:
        raise UsageError(str(exc))
    out = _out_dir(args)
    traj.save(out)
    print(f"wrote trajectory ({len(traj.snapshots)} snapshots) to {out}")
    return 0


def cmd_besov_fit(args) -> int:
    if not args.field:
        raise UsageError("besov-fit requires --field <csv>")
    field = load_scalar_field(args.field)
    p = args.p
    payload = {"field": str(args.field), "p": p}
    chash = _config_hash(payload)
    rep = bz.besov_report(field, p)
    rows: list[list] = [
        ["seminorm", float(b), float(s), float("nan"), float("nan")]
        for b, s in zip(rep.beta_grid, rep.seminorms)
    ]
    rows.append(["fitted_alpha", float("nan"), rep.fitted_alpha, rep.fitted_alpha,
                 rep.fit_residual])
    _write_report(_out_dir(args) / "besov_report.csv",
                  ["quantity", "beta_or_eps", "value", "slope", "residual"],
                  rows, chash)
    print(f"fitted regularity exponent: {rep.fitted_alpha:.4f}")
    return 0


def _resolve_probe_fields(cfg: dict):
    specs = _field(cfg, "fields", list, required=True)
    fields, alphas = [], []
    grid = None
    for spec in specs:
        if "file" in spec:
            f = load_scalar_field(spec["file"])
        elif "weierstrass" in spec:
            w = spec["weierstrass"]
            grid_n = int(w.get("grid_n", 8192))
            g = PeriodicGrid(1, grid_n)
            phase = float(w.get("phase", 0.0))
            if phase:
                x = g.axis_centers()
                vals = np.zeros_like(x)
                for k in range(int(w["levels"]) + 1):
                    vals += 2.0 ** (-float(w["alpha"]) * k) * np.cos(
                        (2.0**k) * np.pi * x + phase
                    )
                f = ScalarField(g, vals)
            else:
                f = weierstrass_field(float(w["alpha"]), int(w["levels"]), g)
        else:
            raise UsageError("each probe field needs 'file' or 'weierstrass'")
        if grid is not None and f.grid != grid:
            raise UsageError("probe fields live on different grids")
        grid = f.grid
        fields.append(f)
        alphas.append(float(spec.get("alpha", spec.get("weierstrass", {}).get("alpha", 0.5))))
    return tuple(fields), tuple(alphas)


def cmd_commutator_rate(args) -> int:
    cfg = _load_config(args.config)
    gamma = args.gamma or _field(cfg, "gamma", float, 1.4)
    fields, alphas = _resolve_probe_fields(cfg)
    gname = _field(cfg, "G", str, required=True)
    p = _field(cfg, "p", float, 4.0)
    eps = _field(cfg, "eps", list, [2.0 ** (-k) for k in range(4, 11)])
    try:
        gmap = cm.get_gmap(gname, GasParams(gamma))
        probe = cm.CommutatorProbe(fields, alphas, gmap, p, tuple(float(e) for e in eps))
        fit = cm.chain_rate_fit(probe)
    except (ValueError, DomainError, ResolutionError) as exc:
        raise UsageError(str(exc))
    chash = _config_hash({"G": gname, "p": p, "eps": eps, "alphas": alphas})
    rows = [
        [float(e), float(n), float(b), bool(okay)]
        for e, n, b, okay in zip(fit.eps, fit.norms, fit.bounds, fit.bound_ok)
    ]
    rows.append(["slope", float("nan"), fit.slope, fit.passed])
    _write_report(_out_dir(args) / "commutator_rate.csv",
                  ["eps", "norm", "bound", "pass"], rows, chash)
    print(f"decay slope {fit.slope:.4f} vs predicted {fit.predicted:.4f}: "
          f"{'PASS' if fit.passed else 'FAIL'}")
    return 0 if fit.passed else 1


def cmd_relentropy(args) -> int:
    if not args.traj_a or not args.traj_b:
        raise UsageError("relentropy requires --traj-a and --traj-b directories")
    traj_a = Trajectory.load(args.traj_a)
    traj_b = Trajectory.load(args.traj_b)
    if traj_b.grid.cells_per_dim > traj_a.grid.cells_per_dim:
        traj_b = project_trajectory(traj_b, traj_a.grid)
    elif traj_a.grid.cells_per_dim > traj_b.grid.cells_per_dim:
        traj_a = project_trajectory(traj_a, traj_b.grid)
    params = traj_a.params
    try:
        trace = re_.gronwall_monitor(traj_a, traj_b, params, sigma=args.sigma)
        check = re_.gronwall_envelope_check(trace, sigma=float(trace.times[0]))
    except ValueError as exc:
        raise UsageError(str(exc))
    chash = _config_hash({"a": str(args.traj_a), "b": str(args.traj_b),
                          "sigma": args.sigma})
    rows = []
    for j, t in enumerate(trace.times):
        budget = float(trace.budget[j])
        fitted = float(trace.fitted_k[j])
        okay = bool(trace.skipped[j] or np.isnan(fitted) or fitted <= budget)
        rows.append([float(t), float(trace.integral[j]), float(trace.oslip_c[j]),
                     fitted, okay])
    _write_report(_out_dir(args) / "relentropy_trace.csv",
                  ["t", "integral_E", "oslip_C", "fitted_K", "pass"], rows, chash)
    print(f"Gronwall envelope on [{trace.times[0]:.3g}, {trace.times[-1]:.3g}]: "
          f"{'PASS' if check.ok else 'FAIL'} (utilization {check.utilization:.3f}, "
          f"k_thermo heuristic)")
    return 0 if check.ok else 1


def cmd_oslip_check(args) -> int:
    delta = args.delta
    rows = []
    flags = "masked" if args.mask_wrap else "unmasked"
    if args.traj:
        traj = Trajectory.load(args.traj)
        grid = traj.grid
        times, cs, ds = [], [], []
        for snap in traj.snapshots:
            _, vel, _ = snapshot_primitive(snap, traj.params)
            weak = cd.oslip_weak_min_c(grid, vel)
            disc = cd.oslip_discrete(grid, vel, mask_wrap=args.mask_wrap)
            times.append(snap.t)
            cs.append(weak.min_c)
            ds.append(disc.value)
        kept = [i for i, t in enumerate(times) if t >= delta]
        if len(kept) < 2:
            raise UsageError(f"need at least two snapshots past delta={delta}")
        partial = 0.0
        prev = None
        chash = _config_hash({"traj": str(args.traj), "delta": delta,
                              "mask": args.mask_wrap})
        for i in kept:
            if prev is not None:
                partial += 0.5 * (max(cs[i], 0.0) + max(cs[prev], 0.0)) * (
                    times[i] - times[prev]
                )
            rows.append([times[i], cs[i], ds[i], partial, flags])
            prev = i
        rep = cd.l1_report(np.array([times[i] for i in kept]),
                           np.array([cs[i] for i in kept]), delta)
        if rep.integrability_doubtful:
            flags_line = f"integrability doubtful as delta->0 (power {rep.fit_power:.2f})"
            print(flags_line)
    elif args.field:
        field = load_scalar_field(args.field)
        vel = field.values[None] if field.grid.dims == 1 else None
        if vel is None:
            raise UsageError("2D velocity input needs a trajectory directory")
        weak = cd.oslip_weak_min_c(field.grid, vel)
        disc = cd.oslip_discrete(field.grid, vel, mask_wrap=args.mask_wrap)
        chash = _config_hash({"field": str(args.field), "mask": args.mask_wrap})
        rows.append([0.0, weak.min_c, disc.value, 0.0, flags])
        print(f"min_C = {weak.min_c:.6g}, discrete_C = {disc.value:.6g}")
    else:
        raise UsageError("oslip-check requires --traj <dir> or --field <csv>")
    _write_report(_out_dir(args) / "oslip_report.csv",
                  ["tau", "min_C", "discrete_C", "l1_partial", "flags"], rows, chash)
    return 0


def cmd_verify_thermo(args) -> int:
    gamma = args.gamma or 1.4
    params = GasParams(gamma)
    rho = np.linspace(0.5, 2.0, 50)
    theta = np.linspace(0.5, 2.0, 50)
    rr, tt = np.meshgrid(rho, theta, indexing="ij")
    g1, g2 = verify_gibbs(rr, tt, params)
    p1, p2, p3 = verify_p2(rr, tt, params)
    s_tot = np.linspace(-2.0, 2.0, 50)
    rr2, ss = np.meshgrid(np.linspace(0.25, 4.0, 50), s_tot, indexing="ij")
    _, _, hess = tilde_pressure_derivatives(rr2, ss, params)
    min_eig = float(np.min(np.linalg.eigvalsh(np.moveaxis(hess, (0, 1), (-2, -1)))))
    rows = [
        ["gibbs_density_slot", float(np.max(g1))],
        ["gibbs_temperature_slot", float(np.max(g2))],
        ["ballistic_euler_identity", float(np.max(p1))],
        ["entropy_pressure_identity", float(np.max(p2))],
        ["ballistic_temperature_slope", float(np.max(p3))],
        ["tilde_pressure_min_eigenvalue", min_eig],
    ]
    chash = _config_hash({"gamma": gamma})
    _write_report(_out_dir(args) / "thermo_report.csv",
                  ["quantity", "value"], rows, chash)
    worst = max(v for _, v in rows[:5])
    ok = worst <= 1e-10 and min_eig >= -1e-10
    print(f"max identity residual {worst:.3e}, min Hessian eigenvalue {min_eig:.3e}: "
          f"{'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_accept(args) -> int:
    results = acceptance.run_all(echo=print)
    if args.out:
        rows = [[r.name, r.passed, r.details] for r in results]
        chash = _config_hash({"gates": [r.name for r in results]})
        _write_report(_out_dir(args) / "acceptance.csv",
                      ["gate", "passed", "details"], rows, chash)
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eulerlab",
        description="compressible Euler estimate laboratory",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output directory (default: cwd)")
        p.add_argument("--grid-n", type=int, help="cells per dimension override")
        p.add_argument("--gamma", type=float, help="adiabatic index override")
        p.add_argument("--seed", type=int, default=0, help="global seed")

    p = sub.add_parser("simulate", help="run the finite-volume solver")
    common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("besov-fit", help="regularity report for a field CSV")
    common(p)
    p.add_argument("--field", help="field CSV (x[,y],value)")
    p.add_argument("--p", type=float, default=3.0, help="Lebesgue exponent")
    p.set_defaults(fn=cmd_besov_fit)

    p = sub.add_parser("commutator-rate", help="chain-commutator decay scan")
    common(p)
    p.set_defaults(fn=cmd_commutator_rate)

    p = sub.add_parser("relentropy", help="relative-entropy trace of two runs")
    common(p)
    p.add_argument("--traj-a", help="candidate trajectory directory")
    p.add_argument("--traj-b", help="reference trajectory directory")
    p.add_argument("--sigma", type=float, default=None,
                   help="start of the reported window")
    p.set_defaults(fn=cmd_relentropy)

    p = sub.add_parser("oslip-check", help="one-sided Lipschitz constants")
    common(p)
    p.add_argument("--field", help="1D velocity field CSV")
    p.add_argument("--traj", help="trajectory directory")
    p.add_argument("--delta", type=float, default=0.0,
                   help="lower end of the reported time window")
    p.add_argument("--mask-wrap", action="store_true",
                   help="exclude stencils crossing the periodic wrap")
    p.set_defaults(fn=cmd_oslip_check)

    p = sub.add_parser("verify-thermo", help="closure identity residuals")
    common(p)
    p.set_defaults(fn=cmd_verify_thermo)

    p = sub.add_parser("accept", help="run all acceptance gates")
    common(p)
    p.set_defaults(fn=cmd_accept)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, RangeError, ResolutionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
