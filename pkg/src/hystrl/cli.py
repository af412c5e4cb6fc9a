"""Command line experiment runner.

Usage::

    hystrl <kind> [--config FILE] [--out DIR] [--seed N] [--set K=V ...]
    hystrl compare RUN_A RUN_B
    hystrl --list

Each run writes its resolved configuration, a ``summary.json`` with
stable metric names, and CSV artifacts into the output directory.  For a
fixed configuration and seed the CSV outputs are byte identical between
runs; wall-clock time appears only in the summary.

Exit codes: 0 success, 2 configuration error, 3 diverged run,
4 fatal invariant violation detected during the run.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .adaptive import closed_loop, identify, lyapunov_solve
from .benchmarks import decay_problem, harmonic_problem, integro_problem, order_check
from .errors import ConfigInvalid, HystrlError, NaNDetected, RunDiverged
from .integrator import PCScheme, integrate
from .mesh import DistributedParameter, p_norm, refine, save_parameter
from .operator import rate_experiment
from .plants import FirstOrderPlant, contraction_horizon, regulator_transform

_KINDS = {
    "mesh-info": "refinement summary of the threshold-triangle mesh",
    "approx-error": "operator output error across mesh levels",
    "integrate-benchmark": "integrator convergence on closed-form benchmarks",
    "simulate-plant": "open-loop wing simulation with hysteretic aero force",
    "identify": "online estimation of the distributed parameter",
    "control-wing": "adaptive sliding-mode control of the wing section",
}

_PROBLEMS = {
    "integro": integro_problem,
    "harmonic": harmonic_problem,
    "decay": decay_problem,
}


def _write_csv(path: Path, header: list[str], columns) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _run_mesh_info(cfg: dict, out: Path):
    domain = cfgmod.build_domain(cfg["domain"])
    mesh = refine(domain, int(cfg["level"]))
    _write_csv(
        out / "mesh.csv",
        ["cell", "s1", "s2", "area"],
        [np.arange(mesh.n_cells), mesh.centroids[:, 0], mesh.centroids[:, 1], mesh.areas],
    )
    residual = abs(float(np.sum(mesh.areas)) - domain.area)
    summary = {
        "level": int(cfg["level"]),
        "n_cells": mesh.n_cells,
        "cell_area": float(mesh.areas[0]),
        "total_area": float(np.sum(mesh.areas)),
        "domain_area": domain.area,
        "area_residual": residual,
    }
    return summary, residual > 1e-9 * domain.area


def _run_approx_error(cfg: dict, out: Path):
    rng = np.random.default_rng(int(cfg["seed"]))
    domain = cfgmod.build_domain(cfg["domain"])
    gamma = cfgmod.build_gamma(cfg["gamma"])
    f = cfgmod.build_pl_input(cfg["input"], rng)
    table = rate_experiment(
        domain, gamma, f, cfgmod.build_field_fn(cfg["mu"]), int(cfg["fine_level"]), cfg["levels"]
    )
    table.to_csv(out / "rate.csv")
    summary = {
        "fine_level": table.fine_level,
        "levels": list(table.levels),
        "errors": list(table.errors),
        "constants": list(table.constants),
        "constant_spread": max(table.constants) / min(table.constants),
        "slope": table.slope,
    }
    return summary, False


def _run_integrate_benchmark(cfg: dict, out: Path):
    name = cfg["problem"]
    if name not in _PROBLEMS:
        raise ConfigInvalid(f"unknown benchmark problem {name!r}; have {sorted(_PROBLEMS)}")
    check = order_check(_PROBLEMS[name](), PCScheme(int(cfg["order"])), cfg["dts"])
    with open(out / "errors.csv", "w") as fh:
        fh.write("dt,error\n")
        for h, e in zip(check.dts, check.errors):
            fh.write(f"{h:.17g},{e:.17g}\n")
        fh.write(f"slope,{check.slope:.17g}\n")
    summary = {
        "problem": name,
        "order": int(cfg["order"]),
        "dts": list(check.dts),
        "errors": list(check.errors),
        "slope": None if check.is_exact else check.slope,
        "is_exact": check.is_exact,
    }
    return summary, False


def _wing_setup(cfg: dict):
    aero = cfgmod.build_aero(cfg["aero"])
    form = cfgmod.build_wing(cfg, aero)
    g0, g1 = cfgmod.build_gains(cfg["gains"])
    lin = regulator_transform(form, g0, g1)
    return form, lin


def _run_simulate_plant(cfg: dict, out: Path):
    form, lin = _wing_setup(cfg)
    u = cfgmod.build_signal(cfg["input"])
    rhs = FirstOrderPlant(lin.core, form, u)
    dt, T = float(cfg["dt"]), float(cfg["T"])
    traj = integrate(
        rhs, np.asarray(cfg["X0"], dtype=float), dt, round(T / dt),
        PCScheme(int(cfg["order"])), abort_norm=1e8,
    )
    u_path = np.array([u(t) for t in traj.times])
    traj.to_csv(out / "trajectory.csv", extra={f"u{i + 1}": u_path[:, i] for i in range(u_path.shape[1])})

    aero = form.aero
    mu_norm = p_norm(aero.mu)
    b_norm = float(np.linalg.norm(form.aero_mixer()(np.asarray(cfg["X0"], dtype=float)), 2))
    m_hyst = b_norm * aero.gamma.bound * np.sqrt(aero.mu.domain.area) * mu_norm
    m_input = float(max(np.linalg.norm(u(t)) for t in traj.times[:: max(1, traj.n_nodes // 200)]))
    est = contraction_horizon(
        lin.core,
        float(cfg["contraction"]["window"]),
        float(cfg["contraction"]["radius"]),
        aero.gamma.lipschitz,
        mu_norm,
        float(np.linalg.norm(lin.core.A @ np.asarray(cfg["X0"], dtype=float))),
        m_hyst + m_input,
    )
    summary = {
        "final_norm": float(np.linalg.norm(traj.final)),
        "max_norm": float(np.max(np.linalg.norm(traj.states, axis=1))),
        "contraction_delta": est.delta,
        "contraction_rate": est.growth_rate,
        "mu_norm": mu_norm,
        "T": T,
        "dt": dt,
    }
    return summary, False


def _run_identify(cfg: dict, out: Path):
    form, lin = _wing_setup(cfg)
    pair = lyapunov_solve(lin.core.A, float(cfg["q_scale"]) * np.eye(lin.core.dim))
    res = identify(
        form,
        lin,
        (int(cfg["est_level"]),),
        cfgmod.build_signal(cfg["input"]),
        float(cfg["T"]),
        float(cfg["dt"]),
        np.asarray(cfg["X0"], dtype=float),
        np.asarray(cfg["X_hat0"], dtype=float),
        law=cfg["law"],
        weight=pair.P,
        scheme=PCScheme(int(cfg["order"])),
    )
    m = lin.core.dim
    _write_csv(
        out / "trajectory.csv",
        ["t"] + [f"x{i + 1}" for i in range(m)] + [f"xhat{i + 1}" for i in range(m)],
        [res.times, *res.X.T, *res.X_hat.T],
    )
    _write_csv(
        out / "errors.csv",
        ["t", "state_error", "mismatch"],
        [res.times, res.state_error, res.mismatch],
    )
    save_parameter(out / "mu_hat.csv", res.mu_hat_final)
    summary = res.summary()
    summary.update({"est_level": int(cfg["est_level"]), "law": cfg["law"], "T": cfg["T"], "dt": cfg["dt"]})
    return summary, False


def _run_control_wing(cfg: dict, out: Path):
    form, lin = _wing_setup(cfg)
    pair = lyapunov_solve(lin.core.A, float(cfg["q_scale"]) * np.eye(lin.core.dim))
    res = closed_loop(
        form,
        lin,
        pair,
        int(cfg["ctrl_level"]),
        float(cfg["k"]),
        float(cfg["eps"]),
        float(cfg["T"]),
        float(cfg["dt"]),
        np.asarray(cfg["X0"], dtype=float),
        scheme=PCScheme(int(cfg["order"])),
        diss_slack=float(cfg["diss_slack"]),
    )
    m = lin.core.dim
    _write_csv(
        out / "trajectory.csv",
        ["t"] + [f"x{i + 1}" for i in range(m)],
        [res.times, *res.X.T],
    )
    _write_csv(
        out / "control.csv",
        ["t"] + [f"v{i + 1}" for i in range(res.v.shape[1])] + ["lyapunov", "supply_rate"],
        [res.times, *res.v.T, res.V, res.supply_rate],
    )
    template = DistributedParameter.zeros(form.aero.mu.domain, (int(cfg["ctrl_level"]),))
    save_parameter(out / "mu_hat.csv", template.with_flat(res.mu_hat_values[-1]))
    summary = res.summary()
    fatal = res.d_bound >= res.k
    summary["gain_exceeds_residual_bound"] = not fatal
    return summary, fatal


_HANDLERS = {
    "mesh-info": _run_mesh_info,
    "approx-error": _run_approx_error,
    "integrate-benchmark": _run_integrate_benchmark,
    "simulate-plant": _run_simulate_plant,
    "identify": _run_identify,
    "control-wing": _run_control_wing,
}


def _compare(path_a: str, path_b: str) -> int:
    summaries = []
    for p in (path_a, path_b):
        p = Path(p)
        if p.is_dir():
            p = p / "summary.json"
        if not p.exists():
            print(f"no summary at {p}", file=sys.stderr)
            return 2
        summaries.append(json.loads(p.read_text()))
    a, b = summaries
    if a.get("kind") != b.get("kind"):
        print(f"cannot compare kinds {a.get('kind')!r} and {b.get('kind')!r}", file=sys.stderr)
        return 2
    print(f"kind: {a['kind']}")
    keys = [k for k in a if k in b and isinstance(a[k], (int, float)) and not isinstance(a[k], bool)]
    for k in keys:
        if k == "wall_time_s":
            continue
        va, vb = float(a[k]), float(b[k])
        print(f"{k:32s} {va: .10g} {vb: .10g} delta={vb - va: .4g}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hystrl", description="hysteresis-operator experiment runner"
    )
    parser.add_argument("--list", action="store_true", help="list experiment kinds and exit")
    sub = parser.add_subparsers(dest="kind")
    for kind, help_text in _KINDS.items():
        sp = sub.add_parser(kind, help=help_text)
        sp.add_argument("--config", help="JSON config file (defaults apply otherwise)")
        sp.add_argument("--out", help="output directory (default runs/<kind>)")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument(
            "--set", action="append", default=[], metavar="KEY=VALUE",
            help="override a config entry (dotted path, JSON value)",
        )
    cmp_p = sub.add_parser("compare", help="diff the metrics of two runs of the same kind")
    cmp_p.add_argument("run_a")
    cmp_p.add_argument("run_b")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.list:
        for kind, help_text in _KINDS.items():
            print(f"{kind:22s} {help_text}")
        return 0
    if args.kind is None:
        _build_parser().print_usage()
        return 2
    if args.kind == "compare":
        return _compare(args.run_a, args.run_b)

    try:
        user = {}
        if args.config:
            with open(args.config) as fh:
                user = json.load(fh)
        cfg = cfgmod.resolve_config(args.kind, user)
        cfg = cfgmod.apply_overrides(cfg, args.set)
        if args.seed is not None:
            cfg["seed"] = int(args.seed)
        cfg = cfgmod.resolve_config(args.kind, cfg)
    except (ConfigInvalid, OSError, json.JSONDecodeError, TypeError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out or Path("runs") / args.kind)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    try:
        summary, fatal = _HANDLERS[args.kind](cfg, out)
    except ConfigInvalid as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (NaNDetected, RunDiverged) as exc:
        print(f"run diverged: {exc}", file=sys.stderr)
        return 3
    except HystrlError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 4

    summary = {"kind": args.kind, "seed": cfg["seed"], **summary,
               "wall_time_s": time.perf_counter() - started}
    (out / "config.json").write_text(json.dumps(cfg, indent=2) + "\n")
    (out / "summary.json").write_text(json.dumps(summary, indent=2, default=float) + "\n")
    if fatal:
        print("fatal invariant violation; see summary.json", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
