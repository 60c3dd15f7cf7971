"""Command-line entry point: ``efkpp <command> --config FILE``.

Exit codes: 0 ok, 2 configuration error, 3 parameter outside its admissible
range, 4 solver failure, 5 negative verdict.  Every command writes its
artifacts to the configured output directory and prints one line starting
with ``VERDICT:``.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .dispersion import essential_borders, spreading, curves_to_csv
from .eigen_scan import classify_spectrum, dense_spectrum, rayleigh_bound_check, unstable_region, \
    unweighted_eigenpairs, unweighted_operator
from .errors import DoubleRootMerged, NoConvergence, ParameterError, SolverFailure
from .evans import EvansEnv, default_gamma_grid, scan_small_eigenvalues, reference_value
from .front_solver import front, linearization, load_front
from .pde_sim import run_front_selection, steep_data, write_snapshots

OK, CONFIG, PARAMETER, SOLVER, NEGATIVE = 0, 2, 3, 4, 5


class Verdict(Exception):
    """Raised by a command whose check came out negative."""


def _tag(delta: float) -> str:
    return f"{delta:.6g}".replace("-", "m")


def _dump(path: Path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _map(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _front(cfg, delta: float, cached=None):
    if cached is not None:
        sol = load_front(cached, cfg.reaction)
        if sol.delta == delta and sol.grid == cfg.grid:
            return sol
    steps = max(1, int(np.ceil(abs(delta) / cfg.front_step))) if delta else None
    return front(cfg.reaction, delta, cfg.grid, steps)


def cmd_speed(cfg, out: Path, args) -> str:
    rows = []
    for d in cfg.deltas:
        s = spreading(d, cfg.reaction)
        rows.append({"delta": s.delta, "eta_star": s.eta_star, "c_star": s.c_star,
                     "delta_bar": s.delta_bar})
    _dump(out / "speed.json", {"reaction": cfg.reaction.name, "speeds": rows})
    return f"linear spreading data for {len(rows)} value(s) of delta"


def cmd_front(cfg, out: Path, args) -> str:
    def one(d):
        sol = _front(cfg, d)
        sol.to_csv(out / f"front_delta{_tag(d)}.csv")
        head = sol.header()
        head["residual_history"] = list(sol.history)
        _dump(out / f"front_delta{_tag(d)}.json", head)
        return head["ode_residual"]

    residuals = _map(one, cfg.deltas, args.jobs)
    worst = max(residuals)
    if worst > 1e-7:
        raise Verdict(f"front residual {worst:.3e} exceeds 1e-7")
    return f"fronts converged, max residual {worst:.3e}"


def cmd_spectrum(cfg, out: Path, args) -> str:
    summary, bad = [], []
    for d in cfg.deltas:
        s = spreading(d, cfg.reaction)
        curves = essential_borders(s, cfg.reaction)
        curves_to_csv(curves, out / f"essential_delta{_tag(d)}.csv")
        plus, minus = curves[0], curves[1]
        i = int(np.argmax(plus.lam.real))
        row = {
            "delta": d,
            "plus_max_re": float(plus.lam.real[i]),
            "plus_argmax_k": float(plus.k[i]),
            "minus_max_re": float(np.max(minus.lam.real)),
            "f_prime_one": s.fp1,
        }
        summary.append(row)
        if abs(row["plus_max_re"]) > 1e-12 or abs(row["plus_argmax_k"]) > 1e-9 or row["minus_max_re"] >= 0:
            bad.append(d)
    _dump(out / "spectrum.json", {"borders": summary})
    if bad:
        raise Verdict(f"essential spectrum enters Re > 0 for delta in {bad}")
    return "essential spectrum touches the imaginary axis only at the origin"


def cmd_evans(cfg, out: Path, args) -> str:
    gammas = default_gamma_grid(cfg.gamma_radius, cfg.gamma_n_radii)

    def one(d):
        qd = _front(cfg, d, args.front)
        q0 = qd if d == 0 else _front(cfg, 0.0)
        env = EvansEnv(qd, q0, cfg.eta)
        ref = reference_value(env)
        rep = scan_small_eigenvalues(d, gammas, env, cfg.threshold, ref)
        rep.to_csv(out / f"evans_delta{_tag(d)}.csv")
        return {"delta": d, "min_abs_E": rep.min_modulus, "reference": ref,
                "threshold": cfg.threshold, "n_points": len(rep.samples),
                "n_flagged": len(rep.flagged), "eta": env.eta}

    rows = _map(one, cfg.deltas, args.jobs)
    _dump(out / "evans.json", {"scans": rows})
    flagged = [r["delta"] for r in rows if r["n_flagged"]]
    if flagged:
        raise Verdict(f"|E| below threshold for delta in {flagged}")
    low = min(r["min_abs_E"] for r in rows)
    return f"resonance absent, min|E| = {low:.4g} over the scan grid"


def cmd_scan(cfg, out: Path, args) -> str:
    def one(d):
        sol = _front(cfg, d)
        L = linearization(sol)
        vals, vecs = dense_spectrum(L, vectors=True)
        rep = classify_spectrum(L, sol.spreading, unstable_region(sol), cfg.r_ball, cfg.eta, vals)
        A = unweighted_operator(sol)
        lam, phis = unweighted_eigenpairs(sol, vals, vecs)
        passed = sum(rayleigh_bound_check(A, (lam[k], phis[:, k])) for k in range(lam.size))
        rep.to_csv(out / f"scan_delta{_tag(d)}.csv")
        row = rep.summary()
        row["region"] = rep.region.description
        row["n_unstable_off_band"] = len(rep.unstable_off_band)
        row["rayleigh_passed"] = int(passed)
        row["rayleigh_total"] = int(lam.size)
        return row

    rows = _map(one, cfg.deltas, args.jobs)
    _dump(out / "scan.json", {"spectra": rows})
    bad = [r["delta"] for r in rows
           if r["n_unstable_point_candidates"] or r["n_unstable_off_band"]
           or r["rayleigh_passed"] != r["rayleigh_total"]]
    if bad:
        raise Verdict(f"unstable point-spectrum candidates for delta in {bad}")
    return "no unstable point spectrum found"


def cmd_simulate(cfg, out: Path, args) -> str:
    sim = cfg.sim
    x = sim.grid.x
    u0 = steep_data(x) if sim.preset == "steep" else np.exp(-x**2)
    rows, bad = [], []
    for d in cfg.deltas:
        s = spreading(d, cfg.reaction)
        snaps = []
        track = run_front_selection(d, cfg.reaction, sim.grid, sim.dt, sim.t_end, sim.window, u0,
                                    snapshots=snaps, snapshot_every=max(1, int(round(10 / (2 * sim.dt)))))
        track.to_json(out / f"track_delta{_tag(d)}.json")
        write_snapshots(out / f"snapshots_delta{_tag(d)}.csv", sim.grid, snaps, stride=10)
        target = -1.5 / s.eta_star
        c_fit, a_fit = track.fitted[0], track.fitted[1]
        row = {"delta": d, "c_star": s.c_star, "c_fit": c_fit, "log_coeff_target": target,
               "log_coeff_fit": a_fit, "speed_error": abs(c_fit - s.c_star),
               "log_coeff_rel_error": abs(a_fit - target) / abs(target)}
        rows.append(row)
        if row["speed_error"] > sim.speed_tol or row["log_coeff_rel_error"] > sim.log_tol:
            bad.append(d)
    _dump(out / "simulate.json", {"preset": sim.preset, "runs": rows})
    if bad:
        raise Verdict(f"front speed or log delay off target for delta in {bad}")
    return "selection confirmed, fitted speed within tolerance of c*"


COMMANDS = {
    "speed": cmd_speed,
    "front": cmd_front,
    "spectrum": cmd_spectrum,
    "evans": cmd_evans,
    "scan": cmd_scan,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="efkpp", description="Extended Fisher-KPP front experiments.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="INI configuration file (defaults used if omitted)")
    p.add_argument("--out", help="output directory, overrides [run] output_dir")
    p.add_argument("--jobs", type=int, default=1, help="worker cap for loops over delta")
    p.add_argument("--front", help="cached front CSV reused by the evans command")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be positive", file=sys.stderr)
        return CONFIG
    try:
        cfg = cfgmod.load(args.config) if args.config else cfgmod.parse("")
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return CONFIG
    out = Path(args.out) if args.out else cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    try:
        message = COMMANDS[args.command](cfg, out, args)
    except DoubleRootMerged as exc:
        print(str(exc), file=sys.stderr)
        return PARAMETER
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return PARAMETER
    except NoConvergence as exc:
        _dump(out / "nonconvergence.json", {"message": str(exc), "residual_history": exc.history})
        print(f"solver failure: {exc}", file=sys.stderr)
        return SOLVER
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return SOLVER
    except Verdict as exc:
        print(f"VERDICT: UNSTABLE: {exc}")
        return NEGATIVE
    label = "OK" if args.command in ("speed", "front") else "STABLE"
    print(f"VERDICT: {label}: {message}")
    return OK


if __name__ == "__main__":
    sys.exit(main())
