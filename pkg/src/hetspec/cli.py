"""Command line front end: ``hetspec spectrum|simulate|cooling|bluecurve``.

Configuration is strict JSON (see ``configs/template.jsonc`` for an annotated
version). Every run writes ``manifest.json``, the fully resolved
configuration, which is itself a valid config and reproduces the run.

Exit codes: 0 success, 2 configuration error, 3 regime violation,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .cooling import cooling_sweep
from .errors import ConfigError, HetspecError
from .heterodyne import (
    ModelCombo,
    blue_height_vs_Q,
    classical_inferred_occupancy,
    classical_zero_crossing,
    spectrum,
)
from .montecarlo import Scenario, simulate_sidebands
from .params import (
    CavityParams,
    DetectorParams,
    FieldNoise,
    LaserNoise,
    MechParams,
    SystemParams,
    coupling_for_p,
    validate,
)
from .svgplot import line_plot

CSV_SCHEMA = "hetspec-csv/1"

SCHEMA = {
    "units": str,
    "force": bool,
    "params": {
        "omega_m": float, "gamma_m": float, "n_th": float, "T": float, "beta": float,
        "kappa": float, "kappa_ext": float, "kappa_bar_ext": float, "Delta": float,
        "G": float, "p": float, "g0": float, "Omega": float, "lam": int,
    },
    "noise": {
        "field": str, "alpha": float,
        "laser": {"C_xx": float, "C_xy": float, "C_yy": float, "r": float},
    },
    "detector": {
        "model": str, "Z2": float, "omega_if": float, "i0_ratio": float, "T_bs": float,
        "a_lo": float, "q": float, "v": float, "B": float,
    },
    "scenario": {"tag": str, "combos": list, "image_terms": bool},
    "grids": {"halfwidth": float, "points": int, "Q_min": float, "Q_max": float, "Q_points": int},
    "montecarlo": {
        "seed": int, "segments": int, "T_seg": float, "dt": float, "window": str,
        "halfwidth": float, "threads": int,
    },
    "cooling": {
        "kappa": float, "omega_m0": float, "gamma_m0": float, "n_th0": float, "alpha": float,
        "p": float, "Delta_2_min": float, "Delta_2_max": float, "Delta_2_points": int,
        "ratio_min": float, "ratio_max": float, "ratio_points": int,
    },
    "outputs": {"directory": str, "formats": list},
}

REQUIRED = {
    "spectrum": ("params", "noise", "detector"),
    "simulate": ("params", "noise", "detector", "montecarlo"),
    "cooling": ("cooling",),
    "bluecurve": ("params", "noise"),
}


# ------------------------------------------------------------------ config


def _check(node, schema, where):
    if not isinstance(node, dict):
        raise ConfigError(f"{where or 'config'} must be an object")
    for key, value in node.items():
        if key not in schema:
            raise ConfigError(f"unknown key {where + '.' if where else ''}{key}")
        kind = schema[key]
        path = f"{where}.{key}" if where else key
        if isinstance(kind, dict):
            _check(value, kind, path)
        elif kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{path} must be a number")
        elif kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{path} must be an integer")
        elif not isinstance(value, kind):
            raise ConfigError(f"{path} must be of type {kind.__name__}")


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    _check(cfg, SCHEMA, "")
    if cfg.get("units", "gamma_m") not in ("gamma_m", "si"):
        raise ConfigError("units must be 'gamma_m' or 'si'")
    return cfg


def _require(cfg, command):
    for sec in REQUIRED[command]:
        if sec not in cfg:
            raise ConfigError(f"'{command}' needs a '{sec}' section")


def build_params(cfg):
    """Translate the ``params``/``noise``/``detector`` sections into validated parameters."""
    pr = cfg["params"]
    for key in ("omega_m", "kappa"):
        if key not in pr:
            raise ConfigError(f"params.{key} is required")
    if cfg.get("units", "gamma_m") == "gamma_m" and "T" in pr:
        raise ConfigError("params.T needs units = 'si' (omega_m in rad/s)")
    kappa = float(pr["kappa"])
    if "kappa_ext" in pr and "kappa_bar_ext" in pr:
        raise ConfigError("give kappa_ext or kappa_bar_ext, not both")
    kappa_ext = float(pr.get("kappa_ext", pr.get("kappa_bar_ext", 1.0) * kappa))
    gamma_m = float(pr.get("gamma_m", 1.0))
    omega_m = float(pr["omega_m"])
    if sum(k in pr for k in ("G", "p", "g0")) > 1:
        raise ConfigError("give exactly one of params.G, params.p or params.g0/Omega")
    G = pr.get("G")
    if "p" in pr:
        if pr.get("Delta", 0.0) != 0:
            raise ConfigError("params.p can only set the coupling at zero detuning")
        G = coupling_for_p(float(pr["p"]), kappa, omega_m, gamma_m) if kappa > 0 and gamma_m > 0 else 0.0
    mech = MechParams(omega_m=omega_m, gamma_m=gamma_m, n_th=float(pr.get("n_th", 0.0)),
                      beta=float(pr.get("beta", 1.0)), T=pr.get("T"))
    cav = CavityParams(kappa=kappa, kappa_ext=kappa_ext, Delta=float(pr.get("Delta", 0.0)),
                       G=G, Omega=pr.get("Omega"), g0=pr.get("g0"), lam=int(pr.get("lam", 0)))
    nz = cfg.get("noise", {})
    try:
        laser = LaserNoise(**nz["laser"]) if "laser" in nz else None
        noise = FieldNoise(nz.get("field", "quantum"), float(nz.get("alpha", 1.0)), laser)
        det = DetectorParams(**cfg.get("detector", {}))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    force = bool(cfg.get("force", False))
    return validate(SystemParams(mech, cav, noise, det), force=force)


# ------------------------------------------------------------------ output


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return f"{float(v):.12g}"


def write_csv(path, columns, meta):
    """CSV with ``#`` metadata lines and 12 significant digits."""
    names = list(columns)
    data = [np.asarray(columns[k]).ravel() for k in names]
    with open(path, "w") as fh:
        fh.write(f"# schema: {CSV_SCHEMA}\n")
        fh.write(f"# hetspec: {__version__}\n")
        for k, v in meta.items():
            fh.write(f"# {k}: {v}\n")
        fh.write(",".join(names) + "\n")
        for row in zip(*data):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def _outdir(cfg):
    d = cfg.get("outputs", {}).get("directory", "hetspec_out")
    os.makedirs(d, exist_ok=True)
    return d


def _formats(cfg):
    return set(cfg.get("outputs", {}).get("formats", ["csv", "json", "svg"]))


def _window_grid(cfg, params):
    g = cfg.get("grids", {})
    hw = float(g.get("halfwidth", 10.0)) * params.gamma_m
    n = int(g.get("points", 2001))
    return np.linspace(params.omega_m - hw, params.omega_m + hw, n)


# ---------------------------------------------------------------- commands


def cmd_spectrum(cfg):
    _require(cfg, "spectrum")
    params = build_params(cfg)
    grid = _window_grid(cfg, params)
    sc = cfg.get("scenario", {})
    image = bool(sc.get("image_terms", True))
    combos = sc.get("combos") or [str(ModelCombo.of(params))]
    out, fmts = _outdir(cfg), _formats(cfg)
    written = []
    for name in combos:
        curve = spectrum(name, params, grid, image_terms=image)
        cols = {"omega_tilde": grid}
        for side in ("red", "blue"):
            sb = getattr(curve, side)
            cols.update({f"{side}_S_o": sb.S_o, f"{side}_S_om": sb.S_om,
                         f"{side}_S_m": sb.S_m, f"{side}_S_total": sb.total})
        meta = {"combo": str(curve.combo), "p": _fmt(params.p),
                "kappa_bar_ext": _fmt(params.kappa_bar_ext), "n_eff": _fmt(curve.n_eff),
                "units": "omega_tilde in gamma_m; spectra in Z2"}
        path = os.path.join(out, f"spectrum_{curve.combo}.csv")
        write_csv(path, cols, meta)
        written.append(path)
        if "svg" in fmts:
            floor = float(curve.red.S_o[0])
            line_plot(os.path.join(out, f"spectrum_{curve.combo}.svg"),
                      [(grid, curve.red.total, "red total"), (grid, curve.blue.total, "blue total"),
                       (grid, curve.red.S_om + floor, "red S_o + S_om"),
                       (grid, curve.blue.S_om + floor, "blue S_o + S_om")],
                      title=f"Sideband spectra ({curve.combo})", xlabel="omega_tilde / gamma_m",
                      ylabel="S / |Z|^2", hline=floor)
    return written


def _scenario(cfg):
    mc = cfg["montecarlo"]
    return Scenario(
        segments=int(mc.get("segments", 64)),
        T_seg=float(mc.get("T_seg", 100.0)),
        dt=mc.get("dt"),
        window=mc.get("window", "rect"),
        halfwidth=float(mc.get("halfwidth", 10.0)),
        tag=cfg.get("scenario", {}).get("tag", "custom"),
    )


def cmd_simulate(cfg):
    _require(cfg, "simulate")
    params = build_params(cfg)
    mc = cfg["montecarlo"]
    seed = mc.setdefault("seed", 0)
    image = bool(cfg.get("scenario", {}).get("image_terms", True))
    res = simulate_sidebands(params, scenario=_scenario(cfg), seed=seed,
                             threads=mc.get("threads"), image_terms=image)
    out = _outdir(cfg)
    psd, sb, fit, sc = res.psd, res.sidebands, res.fit, res.scenario
    keep = (psd.omega >= 0) & (psd.omega <= sc.omega_if + 2 * params.omega_m)
    meta = {"seed": seed, "segments": psd.segments, "dt": _fmt(psd.dt),
            "omega_if": _fmt(sc.omega_if), "parseval_ratio": _fmt(psd.parseval_ratio)}
    write_csv(os.path.join(out, "psd.csv"),
              {"omega": psd.omega[keep], "mean": psd.mean[keep], "stderr": psd.stderr[keep]}, meta)
    closed = spectrum(None, params, sb.grid, image_terms=image)
    write_csv(os.path.join(out, "sidebands.csv"),
              {"omega_tilde": sb.grid, "red": sb.red, "red_stderr": sb.red_err,
               "blue": sb.blue, "blue_stderr": sb.blue_err,
               "red_closed_form": closed.red.total, "blue_closed_form": closed.blue.total}, meta)
    n = params.n_eff
    if params.noise.kind == "classical" and params.noise.alpha > 0:
        n = classical_inferred_occupancy(params.n_th, params.noise.alpha, params.p)
    scale = 4 * params.p * params.kappa_bar_ext * params.detector.Z2
    report = fit.as_dict()
    report.update({
        "squashing_sigma": fit.squashing_sigma,
        "expected_h_r": scale * (n + 1), "expected_h_b": scale * n,
        "expected_n": n, "combo": str(ModelCombo.of(params)), "seed": seed,
    })
    write_json(os.path.join(out, "thermometry.json"), report)
    if "svg" in _formats(cfg):
        line_plot(os.path.join(out, "sidebands.svg"),
                  [(sb.grid, sb.red, "red (MC)"), (sb.grid, sb.blue, "blue (MC)"),
                   (sb.grid, closed.red.total, "red closed form"),
                   (sb.grid, closed.blue.total, "blue closed form")],
                  title="Simulated sidebands", xlabel="omega_tilde / gamma_m",
                  ylabel="S / |Z|^2", hline=float(closed.red.S_o[0]))
    return [os.path.join(out, f) for f in ("psd.csv", "sidebands.csv", "thermometry.json")]


def cmd_cooling(cfg):
    _require(cfg, "cooling")
    c = cfg["cooling"]
    for key in ("kappa", "omega_m0"):
        if key not in c:
            raise ConfigError(f"cooling.{key} is required")
    kappa = float(c["kappa"])
    D = np.linspace(float(c.get("Delta_2_min", -5 * kappa)), float(c.get("Delta_2_max", -0.01 * kappa)),
                    int(c.get("Delta_2_points", 25)))
    R = np.geomspace(float(c.get("ratio_min", 10.0)), float(c.get("ratio_max", 1e4)),
                     int(c.get("ratio_points", 13)))
    alpha = float(c.get("alpha", 1.0))
    sw = cooling_sweep(D, R, kappa=kappa, omega_m0=float(c["omega_m0"]),
                       gamma_m0=float(c.get("gamma_m0", 1.0)), n_th0=float(c.get("n_th0", 0.0)),
                       alpha=alpha, p=float(c.get("p", 0.0)))
    out = _outdir(cfg)
    write_csv(os.path.join(out, "cooling_sweep.csv"),
              {"Delta_2": sw.Delta_2, "gamma_ratio": sw.ratio, "G_2": sw.G_2,
               "gamma_m_eff": sw.gamma_m_eff, "omega_m_eff": sw.omega_m_eff,
               "n_classical": sw.n_classical, "n_quantum": sw.n_quantum, "n_inf": sw.n_inf,
               "classical_above_floor": sw.n_classical > alpha / 2},
              {"alpha": _fmt(alpha)})
    summary = {
        "alpha": alpha,
        "min_n_classical": float(np.nanmin(sw.n_classical)),
        "classical_floor_ok": sw.classical_floor_ok,
        "min_n_quantum": float(np.nanmin(sw.n_quantum)),
        "quantum_below_half": bool(np.nanmin(sw.n_quantum) < 0.5),
        "min_n_inf": float(np.nanmin(sw.n_inf)),
        "failed_points": int(np.isnan(sw.n_classical).sum()),
    }
    write_json(os.path.join(out, "cooling_summary.json"), summary)
    return [os.path.join(out, "cooling_sweep.csv"), os.path.join(out, "cooling_summary.json")]


def cmd_bluecurve(cfg):
    _require(cfg, "bluecurve")
    if "p" not in cfg["params"]:
        raise ConfigError("bluecurve needs params.p")
    p = float(cfg["params"]["p"])
    alpha = float(cfg["noise"].get("alpha", 1.0))
    g = cfg.get("grids", {})
    Q = np.linspace(float(g.get("Q_min", 0.2)), float(g.get("Q_max", 10.0)), int(g.get("Q_points", 981)))
    bc = blue_height_vs_Q(Q, alpha, p)
    out = _outdir(cfg)
    write_csv(os.path.join(out, "bluecurve.csv"),
              {"Q": Q, "quantum": bc.quantum, "classical": bc.classical,
               "dquantum_dQ": bc.dquantum, "dclassical_dQ": bc.dclassical},
              {"alpha": _fmt(alpha), "p": _fmt(p), "units": "blue height in 4 p kbar Z2"})
    write_json(os.path.join(out, "bluecurve_summary.json"),
               {"zero_crossing_Q": classical_zero_crossing(alpha, p), "slope_bound_ok": bc.bound_ok,
                "quantum_limit": p, "classical_limit": p - 0.5})
    if "svg" in _formats(cfg):
        line_plot(os.path.join(out, "bluecurve.svg"),
                  [(Q, bc.quantum, "quantum"), (Q, bc.classical, "classical")],
                  title=f"Blue sideband height (alpha={alpha:g}, p={p:g})", xlabel="Q",
                  ylabel="height / (4 p kbar |Z|^2)", hline=0.0)
    return [os.path.join(out, "bluecurve.csv")]


COMMANDS = {"spectrum": cmd_spectrum, "simulate": cmd_simulate,
            "cooling": cmd_cooling, "bluecurve": cmd_bluecurve}


def run(argv=None):
    ap = argparse.ArgumentParser(prog="hetspec", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", help="output directory (overrides outputs.directory)")
    ap.add_argument("--seed", help="Monte Carlo seed (overrides montecarlo.seed)")
    ap.add_argument("--force", action="store_true", help="skip regime guards")
    ap.add_argument("--version", action="version", version=__version__)
    args = ap.parse_args(argv)

    cfg = load_config(args.config)
    if args.out:
        cfg.setdefault("outputs", {})["directory"] = args.out
    if args.seed is not None:
        try:
            seed = int(args.seed)
        except ValueError as exc:
            raise ConfigError(f"--seed must be an integer, got {args.seed!r}") from exc
        cfg.setdefault("montecarlo", {})["seed"] = seed
    if args.force:
        cfg["force"] = True
    written = COMMANDS[args.command](cfg)
    manifest = dict(cfg)
    manifest.setdefault("outputs", {})["directory"] = _outdir(cfg)
    write_json(os.path.join(_outdir(cfg), "manifest.json"), manifest)
    return written


def main(argv=None):
    try:
        for path in run(argv):
            print(path)
    except HetspecError as exc:
        print(f"hetspec: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
