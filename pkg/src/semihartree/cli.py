"""Configuration-driven experiment runner.

Subcommands: simulate | semiclassical | variations | green | compare |
superpose | sweep.  Each takes --config (JSON) and --out; outputs are CSV
tables plus a manifest.json that records every parameter and tolerance, so
any number in any table is reproducible from the manifest alone.  Runs are
deterministic: no timestamps, fixed float formatting, ordered aggregation.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .gauss1d import (
    GaussExperiment, closed_form_C, principal_term_grid, sigma_xx,
    superposition_experiment, theta_coefficients,
)
from .green import apply_kernel, compose_residual, make_kernel_order0
from .moments import (
    TrajectoryState, propagate_order2, propagate_orderN_1d, write_trajectory_csv,
)
from .oracle import (
    Grid1D, SplitStepConfig, fidelity, grid_moments, momentum_representation,
    propagate_split_step, weyl_moment,
)
from .states import class_state_moments, germ_state
from .symbols import (
    anharmonic_model, free_model, gauss_model_1d, harmonic_model,
    poly_kernel_model_1d,
)
from .variations import (
    conserved_invariants, integrate_variations, matriciant_and_liouville,
    q_and_riccati_residual,
)


class ConfigError(ValueError):
    pass


def _fmt(v):
    return f"{v:.17g}"


def _require(cfg, field, typ=None, where="config"):
    if field not in cfg:
        raise ConfigError(f"missing field: {where}.{field}")
    v = cfg[field]
    if typ is not None and not isinstance(v, typ):
        raise ConfigError(f"field {where}.{field} has wrong type (expected {typ})")
    return v


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    hbars = _require(cfg, "hbar", list)
    for h in hbars:
        if not (0.0 < float(h) < 1.0):
            raise ConfigError(f"field hbar: value {h} outside (0, 1)")
    model = _require(cfg, "model", dict)
    _require(model, "name", str, where="model")
    init = cfg.get("initial", {})
    if "type" in init and init["type"] not in {"vacuum", "fock", "coeffs", "grid_file"}:
        raise ConfigError(f"field initial.type: unknown value {init['type']!r}")
    if init.get("type") == "grid_file":
        p = Path(_require(init, "grid_file", str, where="initial"))
        if not p.exists():
            raise ConfigError(f"field initial.grid_file: {p} does not exist")
    mo = cfg.get("moment_order", 2)
    if not 2 <= int(mo) <= 4:
        raise ConfigError(f"field moment_order: {mo} outside [2, 4]")
    grid = cfg.get("grid", {})
    npts = int(grid.get("n_points", 4096))
    if npts & (npts - 1):
        raise ConfigError(f"field grid.n_points: {npts} is not a power of two")
    return cfg


def build_model(mcfg):
    name = mcfg["name"]
    m = float(mcfg.get("m", 1.0))
    if name == "gauss1d":
        return gauss_model_1d(m=m, gamma=float(mcfg.get("gamma", 1.0)),
                              V0=float(mcfg.get("V0", -1.0)),
                              kappa=float(mcfg.get("kappa", 1.0)))
    if name == "free":
        return free_model(m=m)
    if name == "harmonic":
        return harmonic_model(m=m, omega=float(mcfg.get("omega", 1.0)))
    if name == "anharmonic":
        return anharmonic_model(m=m, omega=float(mcfg.get("omega", 1.0)),
                                eps=float(mcfg.get("eps", 0.1)))
    if name == "polykernel1d":
        return poly_kernel_model_1d(m=m, omega=float(mcfg.get("omega", 1.0)),
                                    kappa=float(mcfg.get("kappa", 1.0)),
                                    kernel_coeffs=mcfg.get("kernel_coeffs", [0.0, 0.0, 0.5]))
    raise ConfigError(f"field model.name: unknown model {name!r}")


def _initial_coeffs(init):
    typ = init.get("type", "vacuum")
    if typ == "vacuum":
        return np.array([1.0 + 0.0j])
    if typ == "fock":
        k = int(init.get("k", 0))
        c = np.zeros(k + 1, dtype=complex)
        c[k] = 1.0
        return c
    if typ == "coeffs":
        raw = init.get("coeffs")
        if raw is None:
            raise ConfigError("missing field: initial.coeffs")
        c = np.array([complex(*v) if isinstance(v, (list, tuple)) else complex(v)
                      for v in raw])
        return c / np.linalg.norm(c)
    raise ConfigError(f"initial type {typ!r} needs a grid file (use simulate)")


def _experiment(cfg, hbar):
    mcfg = cfg["model"]
    if mcfg["name"] != "gauss1d":
        raise ConfigError("this mode requires model.name = gauss1d")
    init = cfg.get("initial", {})
    b = init.get("b", [0.0, 1.0])
    return GaussExperiment(
        m=float(mcfg.get("m", 1.0)), gamma=float(mcfg.get("gamma", 1.0)),
        V0=float(mcfg.get("V0", -1.0)), kappa=float(mcfg.get("kappa", 1.0)),
        hbar=hbar, b=complex(float(b[0]), float(b[1])),
        p0=float(init.get("p0", 0.0)), x0=float(init.get("x0", 0.0)),
        c=_initial_coeffs(init),
    )


def _auto_grid(exp, t_final, n_points):
    ts = np.linspace(0.0, t_final, 257)
    kmax = 2 * exp.c.size + 1  # Fock-k envelope factor sqrt(2k+1)
    smax = float(np.max(sigma_xx(exp, ts))) * kmax
    # the +3 gamma margin keeps the padded kernel convolution aperiodic
    half = (20.0 * math.sqrt(smax) + abs(exp.p0) * t_final / (2.0 * exp.m)
            + (3.0 * exp.gamma if exp.kappa_eff * exp.V0 else 0.0) + 1e-6)
    center = exp.x0 + exp.p0 * t_final / (2.0 * exp.m)
    return Grid1D.centered(center, half, n_points)


def _grid_from_cfg(cfg, exp, t_final):
    g = cfg.get("grid", {})
    n_points = int(g.get("n_points", 4096))
    if "half_width" in g and g["half_width"] != "auto":
        return Grid1D.centered(float(g.get("center", exp.x0)),
                               float(g["half_width"]), n_points)
    return _auto_grid(exp, t_final, n_points)


def _tols(cfg):
    t = cfg.get("tolerances", {})
    return float(t.get("rtol", 1e-10)), float(t.get("atol", 1e-10))


def _output_times(cfg):
    t_final = float(_require(cfg, "t_final", (int, float)))
    n_out = int(cfg.get("output_times", 9))
    return np.linspace(t_final / n_out, t_final, n_out)


def _write_manifest(outdir, cfg, extra):
    man = {
        "package": "semihartree",
        "version": __version__,
        "numpy": np.__version__,
        "config": cfg,
    }
    man.update(extra)
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(man, fh, indent=2, sort_keys=True, default=str)


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _oracle_run(exp, cfg, grid, times):
    dt = float(cfg.get("oracle", {}).get("dt", 2e-4))
    psi0 = principal_term_grid(exp, grid, 0.0, n_samples=8).normalized()
    ss = SplitStepConfig(dt=dt, kappa=exp.kappa,
                         kernel=("gaussian", exp.V0, exp.gamma))
    return propagate_split_step(psi0, ss, times), psi0


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(cfg, outdir):
    times = _output_times(cfg)
    rows = []
    for hbar in [float(h) for h in cfg["hbar"]]:
        exp = _experiment(cfg, hbar)
        grid = _grid_from_cfg(cfg, exp, times[-1])
        snaps, _ = _oracle_run(exp, cfg, grid, times)
        for s in snaps:
            sxx = grid_moments(s, 2)
            spp = weyl_moment(s, 2, 0)
            spx = weyl_moment(s, 1, 1)
            rows.append([hbar, s.t, sxx, spp, spx, s.norm])
        last = snaps[-1]
        with open(outdir / f"snapshot_hbar{hbar:g}.csv", "w") as fh:
            fh.write(f"# hbar={_fmt(hbar)} m={_fmt(exp.m)} t={_fmt(last.t)} "
                     f"x0={_fmt(grid.x0)} dx={_fmt(grid.dx)} n={grid.n}\n")
            fh.write("x,re_psi,im_psi\n")
            for x, v in zip(grid.x, last.psi):
                fh.write(f"{_fmt(x)},{_fmt(v.real)},{_fmt(v.imag)}\n")
    _write_csv(outdir / "oracle_moments.csv",
               ["hbar", "t", "sigma_xx", "sigma_pp", "sigma_px", "norm"], rows)
    _write_manifest(outdir, cfg, {"mode": "simulate"})
    return 0


def _semiclassical_pipeline(cfg, hbar):
    exp = _experiment(cfg, hbar)
    model = exp.model()
    N = int(cfg.get("moment_order", 2))
    rtol, atol = _tols(cfg)
    t_final = float(cfg["t_final"])
    ms = class_state_moments(exp.c, exp.m * exp.b, 1.0, exp.D0, hbar, N)
    st0 = TrajectoryState(0.0, np.array([exp.p0, exp.x0]), ms,
                          exp.kappa_eff, hbar, N)
    if N == 2:
        traj = propagate_order2(model, st0, (0.0, t_final), rtol=rtol, atol=atol)
    else:
        traj = propagate_orderN_1d(model, st0, (0.0, t_final), N=N,
                                   rtol=rtol, atol=atol)
    frame = integrate_variations(traj, [[exp.m * exp.b]], [[1.0]],
                                 (0.0, t_final), rtol=rtol, atol=atol)
    return exp, traj, frame


def cmd_semiclassical(cfg, outdir):
    times = _output_times(cfg)
    for hbar in [float(h) for h in cfg["hbar"]]:
        exp, traj, frame = _semiclassical_pipeline(cfg, hbar)
        write_trajectory_csv(traj, outdir / f"trajectory_hbar{hbar:g}.csv", times)
        rows = []
        for t in times:
            B, C, _ = frame.at(t)
            Q = frame.Q_at(t)
            rows.append([t, B[0, 0].real, B[0, 0].imag, C[0, 0].real,
                         C[0, 0].imag, Q[0, 0].real, Q[0, 0].imag])
        _write_csv(outdir / f"frame_hbar{hbar:g}.csv",
                   ["t", "re_B", "im_B", "re_C", "im_C", "re_Q", "im_Q"], rows)
    _write_manifest(outdir, cfg, {"mode": "semiclassical"})
    return 0


def cmd_variations(cfg, outdir):
    report = {}
    times_all = _output_times(cfg)
    for hbar in [float(h) for h in cfg["hbar"]]:
        exp, traj, frame = _semiclassical_pipeline(cfg, hbar)
        inv = conserved_invariants(frame, times_all)
        margin = (times_all[-1] - times_all[0]) / 50.0
        interior = np.clip(times_all, times_all[0] + margin, times_all[-1] - margin)
        ric = q_and_riccati_residual(frame, interior)
        mat = matriciant_and_liouville(traj, frame, (0.0, float(times_all[-1])))
        report[f"hbar={hbar:g}"] = {
            "D0_drift": inv["D0_drift"],
            "D0_tilde_drift": inv["D0_tilde_drift"],
            "riccati_residual": ric["riccati_residual"],
            "q_symmetry": ric["q_symmetry"],
            "min_imq_eigenvalue": ric["min_imq_eigenvalue"],
            "liouville_mismatch": mat.liouville_mismatch,
            "matriciant_identity": mat.identity_residual,
            "symplectic_residual": mat.symplectic_residual,
        }
    with open(outdir / "variations_report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    _write_manifest(outdir, cfg, {"mode": "variations"})
    return 0


def cmd_green(cfg, outdir):
    t_final = float(cfg["t_final"])
    report = {}
    for hbar in [float(h) for h in cfg["hbar"]]:
        exp, traj, frame = _semiclassical_pipeline(cfg, hbar)
        grid = _grid_from_cfg(cfg, exp, t_final)
        kern = make_kernel_order0(traj, 0.0, t_final)
        gs0 = germ_state(traj, frame, 0.0)
        tests = [gs0.to_grid(grid, k=k) for k in range(2)]
        k1 = make_kernel_order0(traj, 0.0, 0.5 * t_final)
        k2 = make_kernel_order0(traj, 0.5 * t_final, t_final)
        comp = compose_residual(k1, k2, kern, tests)
        prop = apply_kernel(kern, tests[0])
        gst = germ_state(traj, frame, t_final)
        fid = fidelity(prop, gst.to_grid(grid, k=0))
        report[f"hbar={hbar:g}"] = {
            "composition_residual": comp,
            "vacuum_propagation_fidelity": fid,
        }
        xs = np.linspace(grid.x0, grid.x0 + grid.length, 129)
        mat = kern.evaluate(xs, xs)
        with open(outdir / f"kernel_hbar{hbar:g}.csv", "w") as fh:
            fh.write("# rows x, cols y; re,im interleaved\n")
            for i in range(xs.size):
                fh.write(",".join(f"{v.real:.17g},{v.imag:.17g}" for v in mat[i]) + "\n")
    with open(outdir / "green_report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    _write_manifest(outdir, cfg, {"mode": "green"})
    return 0


def cmd_compare(cfg, outdir):
    times = _output_times(cfg)
    summary = {}
    for hbar in [float(h) for h in cfg["hbar"]]:
        exp = _experiment(cfg, hbar)
        grid = _grid_from_cfg(cfg, exp, times[-1])
        snaps, _ = _oracle_run(exp, cfg, grid, times)
        rows = []
        worst = 0.0
        for s in snaps:
            law = float(sigma_xx(exp, s.t))
            meas = grid_moments(s, 2)
            rel = abs(meas - law) / law
            worst = max(worst, rel)
            rows.append([s.t, law, meas, rel])
        _write_csv(outdir / f"sigma_xx_hbar{hbar:g}.csv",
                   ["t", "semiclassical", "oracle", "rel_error"], rows)
        sem = principal_term_grid(exp, grid, float(times[-1]))
        summary[f"hbar={hbar:g}"] = {
            "sigma_rel_error_max": worst,
            "terminal_fidelity": fidelity(snaps[-1], sem),
        }
    with open(outdir / "compare_report.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    _write_manifest(outdir, cfg, {"mode": "compare"})
    return 0


def cmd_superpose(cfg, outdir):
    t_final = float(cfg["t_final"])
    sup = cfg.get("superpose", {})
    c1 = complex(*sup.get("c1", [1.0, 0.0]))
    c2 = complex(*sup.get("c2", [1.0, 0.0]))
    k1 = int(sup.get("k1", 0))
    k2 = int(sup.get("k2", 2))
    report = {}
    for hbar in [float(h) for h in cfg["hbar"]]:
        exp = _experiment(cfg, hbar)
        e1 = GaussExperiment(**{**exp.__dict__, "c": _fock_vec(k1)})
        e2 = GaussExperiment(**{**exp.__dict__, "c": _fock_vec(k2)})
        grid = _grid_from_cfg(cfg, exp, t_final)
        dt = float(cfg.get("oracle", {}).get("dt", 2e-4))
        rep = superposition_experiment(e1, e2, c1, c2, t_final, grid, oracle_dt=dt)
        report[f"hbar={hbar:g}"] = {
            k: (v if not isinstance(v, complex) else [v.real, v.imag])
            for k, v in rep.items()
        }
    with open(outdir / "superpose_report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    _write_manifest(outdir, cfg, {"mode": "superpose"})
    return 0


def _fock_vec(k):
    c = np.zeros(k + 1, dtype=complex)
    c[k] = 1.0
    return c


def _loglog_fit(h, y):
    h = np.asarray(h, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        return {"slope": None, "r2": None, "note": "nonpositive values; fit skipped"}
    lx, ly = np.log(h), np.log(y)
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(res[0]) if res.size else 0.0
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(coef[0]), "r2": r2}


def cmd_sweep(cfg, outdir):
    hbars = sorted(float(h) for h in cfg["hbar"])
    if len(hbars) < 3:
        raise ConfigError("field hbar: sweep needs at least 3 values")
    times = _output_times(cfg)
    t_end = float(times[-1])
    sxx_vals, fid_err = [], []
    for hbar in hbars:
        exp = _experiment(cfg, hbar)
        grid = _grid_from_cfg(cfg, exp, t_end)
        snaps, _ = _oracle_run(cfg=cfg, exp=exp, grid=grid, times=[t_end])
        s = snaps[0]
        sxx_vals.append(grid_moments(s, 2))
        sem = principal_term_grid(exp, grid, t_end)
        fid_err.append(max(1.0 - fidelity(s, sem), 1e-16))
    machine_floor = all(e < 1e-12 for e in fid_err)
    report = {
        "hbar": hbars,
        "sigma_xx": sxx_vals,
        "sigma_xx_fit": _loglog_fit(hbars, sxx_vals),
        "fidelity_error": fid_err,
        "fidelity_error_fit": (
            {"slope": None, "r2": None, "note": "error at machine floor; fit skipped"}
            if machine_floor else _loglog_fit(hbars, fid_err)
        ),
    }
    with open(outdir / "sweep_report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    _write_manifest(outdir, cfg, {"mode": "sweep"})
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "semiclassical": cmd_semiclassical,
    "variations": cmd_variations,
    "green": cmd_green,
    "compare": cmd_compare,
    "superpose": cmd_superpose,
    "sweep": cmd_sweep,
}


def main(argv=None):
    parser = argparse.ArgumentParser(prog="semihartree",
                                     description="semiclassical Hartree toolkit")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--hbar", action="append", type=float, default=None,
                        help="override the config hbar list (repeatable)")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed recorded in the manifest (randomized tests)")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if "mode" in cfg and cfg["mode"] != args.command:
            raise ConfigError(
                f"field mode: {cfg['mode']!r} conflicts with subcommand {args.command!r}"
            )
        if args.hbar:
            for h in args.hbar:
                if not (0.0 < h < 1.0):
                    raise ConfigError(f"field hbar: value {h} outside (0, 1)")
            cfg["hbar"] = args.hbar
        cfg["seed"] = args.seed
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](cfg, outdir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # numerical failure
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
