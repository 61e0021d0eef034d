"""Command line front end: config ingestion, run orchestration, persistence.

Subcommands: frame | modes | coeffs | evolve | manybody | converge | verify.
Configs are JSON or INI-style key tables; every run writes into
out_root/<digest>/ with config.json, scalars.json, series/*.csv and
plots/*.svg, where <digest> hashes the normalized config so identical
configs land in the same directory with bit-identical scalar outputs.

Exit codes: 0 ok, 1 config error, 2 numerical failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import configparser
import copy
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, condensation, geometry, manybody, nls, scaling, transverse

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


DEFAULT_CONFIG = {
    "geometry": {
        "curve": "line",            # line | circle | helix | bump_line
        "radius": 2.0,
        "pitch": 1.0,
        "amplitude": 0.2,
        "twist_rate": 0.0,
        "n_nodes": 1024,
    },
    "cross_section": {
        "shape": "rectangle",       # rectangle | disk | ellipse
        "a": np.pi,
        "b": np.pi,
        "radius": 1.0,
        "n": 127,
        "m": 2,
    },
    "scaling": {
        "N": 4,
        "eps": 0.25,
        "beta": 0.25,
        "xi": 0.2,
        "regime": "moderate",
    },
    "solver": {
        "X": 8.0,
        "G": 256,
        "dt": 1e-3,
        "T": 1.0,
        "G_x": 8,
        "dx": 0.5,
        "store_every": 100,
        "initial": "ground",        # ground | gaussian
        "sigma": 1.0,
    },
    "converge": {
        "N_list": [2, 3, 4, 6],
        "alpha": 0.4,
        "eps0": 0.5,
    },
    "output": {
        "out_root": "runs",
    },
}


# ---------------------------------------------------------------------------
# config handling


def _coerce(value: str):
    try:
        return json.loads(value)
    except (json.JSONDecodeError, TypeError):
        return value


def load_config(path=None) -> dict:
    """Read a JSON or INI config and merge it over the defaults."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is None:
        return _validate(cfg)
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        user = json.loads(text)
    else:
        parser = configparser.ConfigParser()
        parser.optionxform = str   # keys are case sensitive
        parser.read_string(text)
        user = {sec: {k: _coerce(v) for k, v in parser.items(sec)}
                for sec in parser.sections()}
    for section, table in user.items():
        if section not in cfg:
            raise ConfigError(f"unknown config section {section!r}")
        if not isinstance(table, dict):
            raise ConfigError(f"section {section!r} must be a table")
        for key, value in table.items():
            if key not in cfg[section]:
                raise ConfigError(f"unknown key {section}.{key}")
            cfg[section][key] = value
    return _validate(cfg)


def _validate(cfg: dict) -> dict:
    s = cfg["scaling"]
    if not 0.0 < s["beta"] < 1.0 / 3.0:
        raise ConfigError("scaling.beta must lie in (0, 1/3)")
    if not 0.0 < s["eps"] <= 1.0:
        raise ConfigError("scaling.eps must lie in (0, 1]")
    try:
        condensation.validate_xi(s["xi"], s["beta"])
    except condensation.CondensationError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg["geometry"]["curve"] not in ("line", "circle", "helix", "bump_line"):
        raise ConfigError(f"unknown curve {cfg['geometry']['curve']!r}")
    if cfg["cross_section"]["shape"] not in ("rectangle", "disk", "ellipse"):
        raise ConfigError(f"unknown shape {cfg['cross_section']['shape']!r}")
    if cfg["scaling"]["regime"] not in ("moderate", "strong"):
        raise ConfigError("scaling.regime must be moderate or strong")
    return cfg


def config_digest(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=float)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def prepare_outdir(cfg: dict, out_override=None) -> Path:
    root = (out_override or os.environ.get("BECTUBE_OUT")
            or cfg["output"]["out_root"])
    out = Path(root) / config_digest(cfg)
    (out / "series").mkdir(parents=True, exist_ok=True)
    (out / "plots").mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(
        json.dumps(cfg, sort_keys=True, indent=2, default=float) + "\n")
    return out


def write_scalars(out: Path, scalars: dict) -> None:
    (out / "scalars.json").write_text(
        json.dumps(scalars, sort_keys=True, indent=2, default=float) + "\n")


def write_csv(path: Path, header, columns) -> None:
    cols = [np.asarray(c) for c in columns]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def write_svg(path: Path, x, y, title: str) -> None:
    """Deterministic single-series SVG line plot."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    W, H, M = 640, 400, 50
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = float(y.min()), float(y.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    px = M + (W - 2 * M) * (x - x0) / (x1 - x0)
    py = H - M - (H - 2 * M) * (y - y0) / (y1 - y0)
    pts = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(px, py))
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W // 2}" y="20" text-anchor="middle" '
        f'font-family="monospace" font-size="14">{title}</text>',
        f'<line x1="{M}" y1="{H - M}" x2="{W - M}" y2="{H - M}" stroke="black"/>',
        f'<line x1="{M}" y1="{M}" x2="{M}" y2="{H - M}" stroke="black"/>',
        f'<text x="{M}" y="{H - M + 20}" font-family="monospace" '
        f'font-size="11">{x0:.6g}</text>',
        f'<text x="{W - M}" y="{H - M + 20}" text-anchor="end" '
        f'font-family="monospace" font-size="11">{x1:.6g}</text>',
        f'<text x="{M - 5}" y="{H - M}" text-anchor="end" '
        f'font-family="monospace" font-size="11">{y0:.6g}</text>',
        f'<text x="{M - 5}" y="{M + 5}" text-anchor="end" '
        f'font-family="monospace" font-size="11">{y1:.6g}</text>',
        f'<polyline points="{pts}" fill="none" stroke="#1f4e8c" '
        'stroke-width="1.5"/>',
        "</svg>",
    ]
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# shared builders


def build_curve(cfg: dict):
    g = cfg["geometry"]
    kind = g["curve"]
    if kind == "line":
        curve = geometry.line()
    elif kind == "circle":
        curve = geometry.circle(g["radius"])
    elif kind == "helix":
        curve = geometry.helix(g["radius"], g["pitch"])
    else:
        curve = geometry.bump_line(amplitude=g["amplitude"])
    return geometry.reparameterize_arclength(curve)


def build_frame(cfg: dict):
    curve = build_curve(cfg)
    frame = geometry.bishop_frame(curve, n_nodes=cfg["geometry"]["n_nodes"])
    rate = cfg["geometry"]["twist_rate"]
    twist = geometry.linear_twist(rate) if rate else geometry.no_twist()
    return frame, twist


def build_modes(cfg: dict) -> transverse.TransverseModes:
    c = cfg["cross_section"]
    if c["shape"] == "rectangle":
        cs = transverse.rectangle(c["a"], c["b"], n=c["n"])
    elif c["shape"] == "disk":
        cs = transverse.disk(c["radius"], n=c["n"])
    else:
        cs = transverse.ellipse(c["a"], c["b"], n=c["n"])
    return transverse.dirichlet_modes(cs, m=c["m"])


# ---------------------------------------------------------------------------
# subcommands


def cmd_frame(cfg: dict, out: Path) -> dict:
    frame, twist = build_frame(cfg)
    frame.to_csv(out / "series" / "frame.csv")
    c1, c2, feasible = geometry.overlap_margin(frame.curve)
    scalars = {
        "kappa_max": float(np.max(frame.kappa)),
        "orthonormality_defect": float(frame.orthonormality_defect()),
        "tube_feasible": bool(feasible),
        "eps_margin_c1": float(c1),
        "eps_margin_c2": float(c2),
    }
    write_svg(out / "plots" / "kappa.svg", frame.x, frame.kappa,
              "curvature along the guide")
    return scalars


def cmd_modes(cfg: dict, out: Path) -> dict:
    modes = build_modes(cfg)
    scalars = modes.summary()
    write_csv(out / "series" / "energies.csv", ["j", "E_j"],
              [np.arange(len(modes.energies)), modes.energies])
    mid = modes.chi[0].shape[1] // 2
    write_svg(out / "plots" / "chi0.svg", modes.cs.y1, modes.chi[0][:, mid],
              "ground mode, central section")
    return scalars


def cmd_coeffs(cfg: dict, out: Path) -> dict:
    frame, twist = build_frame(cfg)
    modes = build_modes(cfg)
    spt = scaling.scaling_params(cfg["scaling"]["N"], cfg["scaling"]["eps"],
                                 cfg["scaling"]["beta"])
    w = scaling.bump_potential()
    b = scaling.b_coefficient(modes, w, cfg["scaling"]["regime"])
    v_geom = geometry.geometric_potential(frame, twist, modes.lchi2)
    xk, vk, kmass = scaling.effective_kernel(modes, w, spt.eps, spt.mu)
    scalars = dict(modes.summary())
    scalars.update({"b": b, "kernel_mass": kmass, "mu": spt.mu, "a": spt.a,
                    "w_mass": w.mass})
    write_csv(out / "series" / "v_geom.csv", ["x", "v_geom"],
              [frame.x, v_geom])
    write_csv(out / "series" / "kernel.csv", ["x", "w0bar"], [xk, vk])
    write_svg(out / "plots" / "kernel.svg", xk, vk, "effective 1D kernel")
    write_svg(out / "plots" / "v_geom.svg", frame.x, v_geom,
              "geometric potential")
    return scalars


def _nls_setup(cfg: dict):
    sv = cfg["solver"]
    X, G = sv["X"], sv["G"]
    if cfg["geometry"]["curve"] == "line" and not cfg["geometry"]["twist_rate"]:
        v_geom = np.zeros(G)
    else:
        frame, twist = build_frame(cfg)
        modes = build_modes(cfg)
        vals = geometry.geometric_potential(frame, twist, modes.lchi2)
        grid = nls.Wave1D(X, np.zeros(G, dtype=complex)).x
        v_geom = np.interp(grid, frame.x, vals,
                           left=vals[0], right=vals[-1])
    pot = nls.Potential1D(v_geom=v_geom)
    modes_b = build_modes(cfg)
    b = scaling.b_coefficient(modes_b, scaling.bump_potential(),
                              cfg["scaling"]["regime"])
    return pot, b


def cmd_evolve(cfg: dict, out: Path) -> dict:
    sv = cfg["solver"]
    pot, b = _nls_setup(cfg)
    if sv["initial"] == "ground":
        w0 = nls.ground_state(pot, b, sv["X"], sv["G"], tol=1e-8)
    else:
        w0 = nls.gaussian(sv["X"], sv["G"], sigma=sv["sigma"])
    traj = nls.evolve(w0, pot, b, dt=sv["dt"], T=sv["T"],
                      store_every=sv["store_every"])
    reports = [nls.report(w, pot, b) for w in traj]
    t = [r.t for r in reports]
    write_csv(out / "series" / "observables.csv",
              ["t", "mass", "energy", "h1", "h2", "sup"],
              [t, [r.mass for r in reports], [r.energy for r in reports],
               [r.h1 for r in reports], [r.h2 for r in reports],
               [r.sup for r in reports]])
    write_svg(out / "plots" / "energy.svg", t, [r.energy for r in reports],
              "effective energy per particle")
    chain = all(nls.sobolev_check(w)["chain_ok"] for w in traj)
    return {
        "mass_drift": max(abs(r.mass - reports[0].mass) for r in reports),
        "energy_drift": max(abs(r.energy - reports[0].energy)
                            for r in reports),
        "boundary_mass": traj[-1].boundary_mass(),
        "sobolev_chain_ok": bool(chain),
        "b": b,
    }


def _manybody_point(cfg: dict, N: int, eps: float, modes, T: float,
                    n_frames: int = 10):
    """One (N, eps) run: exact evolution plus the lattice mean-field
    reference, with condensation observables at stored times."""
    sv = cfg["solver"]
    sc = cfg["scaling"]
    G_x, m, dx = sv["G_x"], cfg["cross_section"]["m"], sv["dx"]
    spt = scaling.scaling_params(N, eps, sc["beta"])
    w = scaling.bump_potential()
    spb = manybody.SingleParticleBasis(G_x=G_x, dx=dx, eps=eps,
                                       transverse_energies=modes.energies[:m])
    offsets, K = manybody.mode_kernel(modes, w, spt, dx)
    h_one = manybody.one_body_matrix(spb)
    basis = manybody.build_basis(spb.d, N)
    H = manybody.build_hamiltonian(basis, h_one, offsets, K, G_x=G_x, m=m)

    evals, evecs = np.linalg.eigh(h_one)
    phi0 = evecs[:, 0].astype(complex)
    psi0 = manybody.condensate_state(basis, phi0)

    steps = max(n_frames, 10)
    frames = manybody.evolve_state(basis, H, psi0, T=T,
                                   dt=T / (steps * 4),
                                   store_every=4)
    dt_h = min(1e-3, T / 1000)
    hart = manybody.hartree_evolve(h_one, offsets, K, G_x, m, N, phi0,
                                   T=T, dt=dt_h)
    ht = np.array([f[0] for f in hart])

    xi = sc["xi"]
    mweight = condensation.weight_m(N, xi)
    e0 = manybody.energy_per_particle(basis, psi0, H)
    rows = []
    for tpsi, psi in frames:
        idx = int(np.argmin(np.abs(ht - tpsi)))
        phi_t = hart[idx][1]
        phi_t = phi_t / np.linalg.norm(phi_t)
        ref = condensation.condensate_ref(phi_t)
        pk = condensation.sector_weights(basis, ref, psi)
        a_n2 = float(np.dot(condensation.weight_n(N, 2.0).table, pk))
        a_m = float(np.dot(mweight.table, pk))
        e_psi = manybody.energy_per_particle(basis, psi, H)
        e_phi = manybody.hartree_energy(h_one, offsets, K, G_x, m, N, phi_t)
        g1 = manybody.reduced_density(basis, psi, M=1)
        tdist = manybody.trace_distance(g1, ref.projector)
        rows.append({
            "t": tpsi, "alpha_n2": a_n2, "alpha_m": a_m,
            "alpha_xi": condensation.alpha_xi_value(a_m, e_psi, e_phi),
            "trace_dist": tdist, "e_psi": e_psi, "e_phi": e_phi,
            "excitation": manybody.excitation_probability(basis, psi, spb),
            "g": manybody.g_function(e0, tpsi),
        })
    return rows


def cmd_manybody(cfg: dict, out: Path) -> dict:
    sc = cfg["scaling"]
    modes = build_modes(cfg)
    rows = _manybody_point(cfg, sc["N"], sc["eps"], modes,
                           T=cfg["solver"]["T"])
    keys = ["t", "e_psi", "e_phi", "g", "excitation", "alpha_n2", "alpha_m",
            "alpha_xi", "trace_dist"]
    write_csv(out / "series" / "trajectory.csv", keys,
              [[r[k] for r in rows] for k in keys])
    t = [r["t"] for r in rows]
    write_svg(out / "plots" / "alpha_n2.svg", t, [r["alpha_n2"] for r in rows],
              "condensate depletion")
    return {
        "final_alpha_n2": rows[-1]["alpha_n2"],
        "final_trace_dist": rows[-1]["trace_dist"],
        "final_excitation": rows[-1]["excitation"],
        "energy_drift": max(abs(r["e_psi"] - rows[0]["e_psi"]) for r in rows),
    }


def cmd_converge(cfg: dict, out: Path) -> dict:
    cv = cfg["converge"]
    modes = build_modes(cfg)
    N_list = list(cv["N_list"])
    N0 = N_list[0]
    results = []
    for N in N_list:
        eps = cv["eps0"] * (N / N0) ** (-cv["alpha"])
        rows = _manybody_point(cfg, N, eps, modes, T=cfg["solver"]["T"])
        final = rows[-1]
        results.append({"N": N, "eps": eps, **{k: final[k] for k in
                        ("alpha_n2", "alpha_m", "alpha_xi", "trace_dist",
                         "excitation")}})
    keys = ["N", "eps", "alpha_n2", "alpha_m", "alpha_xi", "trace_dist",
            "excitation"]
    write_csv(out / "series" / "convergence.csv", keys,
              [[r[k] for r in results] for k in keys])
    Ns = np.array([r["N"] for r in results], dtype=float)
    al = np.array([max(r["alpha_n2"], 1e-300) for r in results])
    slope = float(np.polyfit(np.log(Ns), np.log(al), 1)[0])
    write_svg(out / "plots" / "trace_distance.svg", Ns,
              [r["trace_dist"] for r in results], "trace distance vs N")
    write_svg(out / "plots" / "alpha_n2.svg", Ns, al,
              "depletion vs N at final time")
    return {
        "alpha_n2_by_N": {str(r["N"]): r["alpha_n2"] for r in results},
        "trace_dist_by_N": {str(r["N"]): r["trace_dist"] for r in results},
        "decay_exponent": -slope,
        "monotone_decreasing": bool(np.all(np.diff(al) < 0)),
    }


# ---------------------------------------------------------------------------
# verification suite


def _verify_registry():
    """(module, name, callable) triples; each callable returns
    (ok: bool, value: float)."""
    checks = []

    def add(module, name):
        def deco(fn):
            checks.append((module, name, fn))
            return fn
        return deco

    @add("geometry", "circle_curvature")
    def _():
        fr = geometry.bishop_frame(
            geometry.reparameterize_arclength(geometry.circle(2.0)))
        d = float(np.max(np.abs(fr.kappa - 0.5)))
        return d < 1e-8, d

    @add("geometry", "helix_curvature")
    def _():
        fr = geometry.bishop_frame(
            geometry.reparameterize_arclength(geometry.helix(1.0, 1.0)))
        d = float(np.max(np.abs(fr.kappa - 0.5)))
        return d < 1e-6, d

    @add("geometry", "frame_orthonormality")
    def _():
        fr = geometry.bishop_frame(
            geometry.reparameterize_arclength(geometry.bump_line()))
        d = float(fr.orthonormality_defect())
        return d < 1e-8, d

    @add("geometry", "straight_guide_flat_potential")
    def _():
        fr = geometry.bishop_frame(geometry.line())
        v = geometry.geometric_potential(fr, geometry.no_twist(), 1.0)
        d = float(np.max(np.abs(v)))
        return d == 0.0, d

    @add("transverse", "rectangle_ground_energy")
    def _():
        modes = transverse.dirichlet_modes(
            transverse.rectangle(np.pi, np.pi, n=127), m=1)
        d = abs(modes.e0 - 2.0) / 2.0
        return d < 5e-3, d

    @add("transverse", "rectangle_quartic_integral")
    def _():
        modes = transverse.dirichlet_modes(
            transverse.rectangle(np.pi, np.pi, n=127), m=1)
        d = abs(modes.q4 - 9.0 / (4 * np.pi**2))
        return d < 1e-3, d

    @add("transverse", "disk_ground_energy")
    def _():
        modes = transverse.dirichlet_modes(transverse.disk(1.0, n=128), m=1)
        exact = 5.783185962946785
        d = abs(modes.e0 - exact) / exact
        return d < 1e-2, d

    @add("scaling", "coupling_roundtrip")
    def _():
        p = scaling.scaling_params(100, 0.3, 0.25)
        d = abs(p.mu ** (1.0 / p.beta) - p.a)
        return d < 1e-15, d

    @add("scaling", "classifier_examples")
    def _():
        n = np.unique(np.geomspace(4, 64, 8).astype(int))
        mod = scaling.classify_sequence(
            [scaling.scaling_params(k, float(k) ** -0.4, 0.25) for k in n])
        strong = scaling.classify_sequence(
            [scaling.scaling_params(k, 1.0 / k, 0.25) for k in n])
        const = scaling.classify_sequence(
            [scaling.ScalingPoint(int(k), 0.5 - 1e-9 * k, 0.25) for k in n])
        ok = (mod.admissible and mod.moderate and strong.admissible
              and strong.strong and not const.admissible)
        return ok, float(ok)

    @add("scaling", "rectangle_coupling_value")
    def _():
        modes = transverse.dirichlet_modes(
            transverse.rectangle(np.pi, np.pi, n=127), m=1)
        w = scaling.bump_potential().scaled(1.0 / scaling.bump_potential().mass)
        b = scaling.b_coefficient(modes, w, "moderate")
        d = abs(b - 9.0 / (4 * np.pi**2))
        return d < 1e-3, d

    @add("nls", "plane_wave_phase")
    def _():
        X, b = 8.0, 0.5
        w0 = nls.plane_wave(X, 256, mode=2)
        traj = nls.evolve(w0, nls.free_potential(), b, dt=1e-3, T=1.0,
                          store_every=1000)
        wf = traj[-1]
        k = 2 * np.pi / X
        exact = np.exp(1j * (k * wf.x - (k**2 + b / (2 * X)))) / np.sqrt(2 * X)
        d = float(np.max(np.abs(wf.values - exact)))
        return d < 1e-6, d

    @add("nls", "mass_conservation")
    def _():
        w0 = nls.gaussian(8.0, 256)
        traj = nls.evolve(w0, nls.free_potential(), 1.0, dt=1e-3, T=1.0,
                          store_every=200)
        d = max(abs(w.mass() - 1.0) for w in traj)
        return d < 1e-10, d

    @add("nls", "static_energy_conservation")
    def _():
        grid = nls.Wave1D(8.0, np.zeros(256, complex)).x
        pot = nls.Potential1D(v_geom=0.1 * np.exp(-grid**2 / 8))
        w0 = nls.gaussian(8.0, 256, sigma=2.0)
        traj = nls.evolve(w0, pot, 0.5, dt=1e-3, T=1.0, store_every=200)
        e = [nls.energy(w, pot, 0.5) for w in traj]
        d = max(abs(v - e[0]) for v in e) / max(1.0, abs(e[0]))
        return d < 1e-8, d

    @add("nls", "energy_derivative_identity")
    def _():
        pot = nls.Potential1D(
            v=lambda t, x: np.sin(t) * np.exp(-x**2 / 4),
            vdot=lambda t, x: np.cos(t) * np.exp(-x**2 / 4))
        w0 = nls.gaussian(8.0, 256)
        traj = nls.evolve(w0, pot, 1.0, dt=1e-3, T=0.5, store_every=1)
        d = nls.energy_drift_check(traj, pot, 1.0)
        return d < 1e-5, d

    @add("nls", "sobolev_chain")
    def _():
        w = nls.gaussian(8.0, 256, sigma=0.7)
        rep = nls.sobolev_check(w)
        ok = rep["chain_ok"] and rep["density_ok"]
        return ok, float(ok)

    @add("nls", "linear_ground_state_oracle")
    def _():
        v = 0.5 * nls.Wave1D(8.0, np.zeros(256, complex)).x ** 2
        pot = nls.Potential1D(v_geom=v)
        a = nls.ground_state(pot, 0.0, 8.0, 256, tol=1e-10)
        b = nls.linear_ground_state(pot, 8.0, 256)
        d = float(np.max(np.abs(np.abs(a.values) - np.abs(b.values))))
        return d < 1e-6, d

    def _small_system():
        modes = transverse.dirichlet_modes(
            transverse.rectangle(np.pi, np.pi, n=63), m=2)
        spt = scaling.scaling_params(3, 0.25, 0.25)
        spb = manybody.SingleParticleBasis(
            G_x=6, dx=0.5, eps=0.25, transverse_energies=modes.energies)
        w = scaling.bump_potential()
        offsets, K = manybody.mode_kernel(modes, w, spt, 0.5)
        h = manybody.one_body_matrix(spb)
        basis = manybody.build_basis(spb.d, 3)
        H = manybody.build_hamiltonian(basis, h, offsets, K, G_x=6, m=2)
        evals, evecs = np.linalg.eigh(h)
        psi0 = manybody.condensate_state(basis, evecs[:, 0].astype(complex))
        return basis, H, psi0, spb

    @add("manybody", "hermiticity_and_unitarity")
    def _():
        basis, H, psi0, spb = _small_system()
        herm = abs(H - H.getH()).max()
        frames = manybody.evolve_state(basis, H, psi0, T=0.2, dt=0.01)
        drift = max(abs(np.linalg.norm(p) - 1.0) for _, p in frames)
        d = float(max(herm, drift))
        return d < 1e-9, d

    @add("manybody", "krylov_vs_dense")
    def _():
        basis, H, psi0, spb = _small_system()
        frames = manybody.evolve_state(basis, H, psi0, T=0.2, dt=0.01)
        dense = manybody.evolve_state_dense(H, psi0, [0.2])
        ref = dense[0][1] / np.linalg.norm(dense[0][1])
        d = float(np.linalg.norm(frames[-1][1] - ref))
        return d < 1e-8, d

    @add("manybody", "static_energy_conservation")
    def _():
        basis, H, psi0, spb = _small_system()
        frames = manybody.evolve_state(basis, H, psi0, T=0.2, dt=0.01,
                                       store_every=5)
        e = [manybody.energy_per_particle(basis, p, H) for _, p in frames]
        d = max(abs(v - e[0]) for v in e)
        return d < 1e-8, d

    @add("manybody", "gamma1_positive_unit_trace")
    def _():
        basis, H, psi0, spb = _small_system()
        frames = manybody.evolve_state(basis, H, psi0, T=0.2, dt=0.01)
        g1 = manybody.reduced_density(basis, frames[-1][1], M=1)
        ev = np.linalg.eigvalsh(g1)
        d = float(max(-ev.min(), abs(np.trace(g1).real - 1.0)))
        return d < 1e-10, d

    @add("manybody", "first_quantized_bridge")
    def _():
        N, d0 = 2, 3
        basis = manybody.build_basis(d0, N)
        psi_dense = condensation.random_symmetric_state(N, d0, seed=11)
        psi_fock = condensation.dense_to_fock(psi_dense, basis)
        g_fock = manybody.reduced_density(basis, psi_fock, M=1)
        g_dense = condensation.reduced_density_dense(psi_dense, N, d0, M=1)
        d = float(np.abs(g_fock - g_dense).max())
        return d < 1e-12, d

    @add("condensation", "operator_algebra")
    def _():
        led = condensation.weight_algebra_suite(N=3, d=4, seed=0)
        slack = led.pop("qq_inequality_slack")
        d = max(led.values())
        return d < 1e-10 and slack >= 0, float(d)

    @add("condensation", "weight_bounds")
    def _():
        ok = True
        for N in (100, 1000, 10_000):
            for xi in (0.1, 0.2, 0.4):
                for ell in (1, 2, 3):
                    _, rep = condensation.weight_m_ell(N, xi, ell)
                    ok = ok and rep["nonnegative"] and rep["sqrt_branch_ok"] \
                        and rep["linear_branch_ok"]
        return ok, float(ok)

    @add("condensation", "fock_dense_bridge")
    def _():
        N, d0 = 2, 3
        basis = manybody.build_basis(d0, N)
        psi_dense = condensation.random_symmetric_state(N, d0, seed=7)
        rng = np.random.default_rng(13)
        phi = rng.standard_normal(d0) + 1j * rng.standard_normal(d0)
        ref = condensation.condensate_ref(phi)
        bundle = condensation.pk_projectors(ref, N)
        pk_dense = np.array([np.vdot(psi_dense, P @ psi_dense).real
                             for P in bundle.P])
        pk_fock = condensation.sector_weights(
            basis, ref, condensation.dense_to_fock(psi_dense, basis))
        d = float(np.abs(pk_dense - pk_fock).max())
        return d < 1e-12, d

    @add("condensation", "measure_equivalence")
    def _():
        rep = condensation.equivalence_suite()
        ok = rep["identity_defect"] < 1e-10 and rep["co_monotone"]
        return ok, float(rep["identity_defect"])

    return checks


def cmd_verify(cfg: dict, out: Path) -> dict:
    checks = _verify_registry()
    modules = {m for m, _, _ in checks}
    expected = {"geometry", "transverse", "scaling", "nls", "manybody",
                "condensation"}
    if modules != expected:
        raise RuntimeError(f"verify registry incomplete: missing "
                           f"{expected - modules}")
    scalars = {}
    n_fail = 0
    for module, name, fn in checks:
        ok, value = fn()
        scalars[f"{module}.{name}"] = {"ok": bool(ok), "value": float(value)}
        status = "pass" if ok else "FAIL"
        print(f"  {status}  {module}.{name}  ({value:.3e})")
        if not ok:
            n_fail += 1
    scalars["failures"] = n_fail
    if n_fail:
        raise VerificationFailure(f"{n_fail} verification checks failed",
                                  scalars)
    return scalars


class VerificationFailure(RuntimeError):
    def __init__(self, msg, scalars):
        super().__init__(msg)
        self.scalars = scalars


# ---------------------------------------------------------------------------
# entry point


COMMANDS = {
    "frame": cmd_frame,
    "modes": cmd_modes,
    "coeffs": cmd_coeffs,
    "evolve": cmd_evolve,
    "manybody": cmd_manybody,
    "converge": cmd_converge,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bectube",
        description="thin-waveguide boson dynamics laboratory")
    parser.add_argument("subcommand", choices=sorted(COMMANDS))
    parser.add_argument("--config", default=None,
                        help="JSON or INI run configuration")
    parser.add_argument("--out", default=None, help="output root override")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError, json.JSONDecodeError,
            configparser.Error) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = prepare_outdir(cfg, args.out)
    t0 = time.time()
    try:
        scalars = COMMANDS[args.subcommand](cfg, out)
    except VerificationFailure as exc:
        write_scalars(out, exc.scalars)
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except Exception as exc:  # numerical / module errors
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_scalars(out, scalars)
    record = {
        "digest": config_digest(cfg),
        "version": __version__,
        "subcommand": args.subcommand,
        "wall_time_s": round(time.time() - t0, 3),
    }
    (out / "record.json").write_text(
        json.dumps(record, sort_keys=True, indent=2) + "\n")
    print(f"wrote {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
