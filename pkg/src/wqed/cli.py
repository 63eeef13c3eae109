"""Command-line scenario runner.

Usage: wqed <kind> --config FILE | --preset NAME [--seed N] [--out DIR]
       wqed validate --config FILE | --preset NAME
       wqed sweep --config FILE --grid FILE [--out DIR] [--jobs N]

Every run writes RFC-4180 CSV tables plus a JSON manifest that echoes
the scenario, the unit system, and a checksum for each output file.
Reruns with the same scenario and seed are byte-identical.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
import time

import numpy as np

from . import presets
from .chiral_master_equation import (
    AtomNode,
    NetworkConfig,
    filtered_correlations,
    reflected_g2,
)
from .cavity_array import (
    LatticeConfig,
    evolve_lattice,
    evolve_single,
    gaussian_wavepacket,
    init_two_photon,
)
from .emitter_dynamics import (
    DriveSpec,
    emission_spectrum,
    populations,
    sideband_weights,
)
from .errors import ConfigInvalid, WqedError
from .io import (
    as_int,
    as_number,
    file_checksum,
    load_config,
    require_keys,
    write_csv,
    write_manifest,
)
from .modulation import ModulationSpec, TargetSpectrum, optimize_modulation
from .mps_timebin import TimeBinConfig, run as run_timebin
from .scattering import (
    GiantArray,
    ModulationAmps,
    analytic_g2,
    g2_harmonics,
    inelastic_r,
    single_photon_rt,
)

VERSION = "0.1.0"

KINDS = ("floquet-optimize", "emit-spectrum", "spectra", "correlations",
         "g2-dynamics", "mps-run", "lattice-run")


# ---------------------------------------------------------------- scenario

def _load_scenario(args, expect_kind=None) -> dict:
    if getattr(args, "preset", None):
        try:
            scenario = presets.get(args.preset)
        except KeyError as exc:
            raise ConfigInvalid(str(exc.args[0]))
    else:
        scenario = load_config(args.config)
    require_keys(scenario, ("params",), ("kind", "seed", "output_dir"),
                 context="scenario")
    kind = scenario.get("kind", expect_kind)
    if kind is None:
        raise ConfigInvalid("scenario: missing key 'kind'")
    if expect_kind is not None and kind != expect_kind:
        raise ConfigInvalid(
            f"scenario: kind '{kind}' does not match subcommand "
            f"'{expect_kind}'")
    if kind not in KINDS:
        raise ConfigInvalid(f"scenario: unknown kind '{kind}'")
    scenario["kind"] = kind
    if getattr(args, "seed", None) is not None:
        scenario["seed"] = args.seed
    scenario.setdefault("seed", 0)
    if getattr(args, "out", None):
        scenario["output_dir"] = args.out
    scenario.setdefault("output_dir",
                        "wqed-" + kind.replace("-", "_") + "-out")
    return scenario


def _as_complex(value, context):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigInvalid(f"{context}: expected a number or [re, im] pair")


def _int_keyed(block, context):
    out = {}
    for key, val in block.items():
        try:
            k = int(key)
        except (TypeError, ValueError):
            raise ConfigInvalid(f"{context}: sideband index '{key}' is "
                                "not an integer")
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigInvalid(f"{context}: value for '{key}' must be "
                                "a number")
        out[k] = float(val)
    return out


def _modulation_spec(block, context="params.modulation") -> ModulationSpec:
    require_keys(block, ("Omega",), ("omega0", "tones"), context)
    tones = []
    for i, tone in enumerate(block.get("tones", [])):
        ctx = f"{context}.tones[{i}]"
        require_keys(tone, ("r", "a"), ("b",), ctx)
        tones.append((as_int(tone, "r", ctx), as_number(tone, "a", ctx),
                      as_number(tone, "b", ctx) if "b" in tone else 0.0))
    return ModulationSpec(omega0=float(block.get("omega0", 0.0)),
                          Omega=as_number(block, "Omega", context),
                          tones=tuple(tones))


def _drive_spec(block, context="params.drive") -> DriveSpec:
    require_keys(block, ("xi", "T_d"), ("shape",), context)
    return DriveSpec(xi=as_number(block, "xi", context),
                     T_d=as_number(block, "T_d", context),
                     shape=block.get("shape", "rect"))


def _giant_array(block, context="params.array") -> GiantArray:
    require_keys(block, ("N", "M", "varphi", "topology"),
                 ("gamma1D", "omega0"), context)
    return GiantArray(N=as_int(block, "N", context),
                      M=as_int(block, "M", context),
                      varphi=as_number(block, "varphi", context),
                      topology=block["topology"],
                      gamma1D=float(block.get("gamma1D", 1.0)),
                      omega0=float(block.get("omega0", 0.0)))


def _network(params, context="params") -> NetworkConfig:
    atoms = []
    for i, blk in enumerate(params["atoms"]):
        ctx = f"{context}.atoms[{i}]"
        require_keys(blk, ("legs",),
                     ("modulation", "detuning", "gamma_L", "gamma_R",
                      "driven"), ctx)
        legs = tuple((float(x), float(phi)) for x, phi in blk["legs"])
        mod = blk.get("modulation", [0.0, 0.0])
        atoms.append(AtomNode(
            legs=legs, modulation=(float(mod[0]), float(mod[1])),
            detuning=float(blk.get("detuning", 0.0)),
            gamma_L=blk.get("gamma_L"), gamma_R=blk.get("gamma_R"),
            driven=bool(blk.get("driven", True))))
    return NetworkConfig(
        atoms=tuple(atoms),
        gamma_L=as_number(params, "gamma_L", context),
        gamma_R=as_number(params, "gamma_R", context),
        k0=as_number(params, "k0", context),
        Omega=as_number(params, "Omega", context),
        epsilon=float(params.get("epsilon", 0.0)),
        rabi=_as_complex(params.get("rabi", 0.0), f"{context}.rabi"))


# ------------------------------------------------------- builders (per kind)
# Each builder validates params and constructs the domain objects
# without running any evolution; `validate` stops here.

def _build_floquet_optimize(params):
    require_keys(params, ("target", "R"),
                 ("K", "Omega", "omega0", "budget", "tol", "n_particles",
                  "n_iterations", "bound", "harmonics", "drive", "t_f",
                  "gamma", "n_omega"), "params")
    tgt = params["target"]
    require_keys(tgt, ("targets",),
                 ("weights", "dont_care", "background_weight"),
                 "params.target")
    target = TargetSpectrum(
        targets=_int_keyed(tgt["targets"], "params.target.targets"),
        weights=_int_keyed(tgt.get("weights", {}), "params.target.weights"),
        dont_care=frozenset(int(k) for k in tgt.get("dont_care", [])),
        background_weight=float(tgt.get("background_weight", 0.1)))
    built = {"target": target, "R": as_int(params, "R"),
             "K": int(params.get("K", 5)),
             "Omega": float(params.get("Omega", 1.0)),
             "omega0": float(params.get("omega0", 0.0)),
             "budget": int(params.get("budget", 10000)),
             "tol": float(params.get("tol", 1e-4)),
             "n_particles": int(params.get("n_particles", 40)),
             "n_iterations": int(params.get("n_iterations", 200)),
             "bound": params.get("bound"),
             "harmonics": params.get("harmonics"),
             "gamma": float(params.get("gamma", 1.0)),
             "t_f": float(params.get("t_f", 14.0)),
             "n_omega": int(params.get("n_omega", 0)),
             "drive": None}
    if "drive" in params:
        built["drive"] = _drive_spec(params["drive"])
    return built


def _build_emit_spectrum(params):
    require_keys(params, ("modulation", "drive", "t_f"),
                 ("gamma", "K", "n_t", "omega_min", "omega_max",
                  "n_omega", "dt"), "params")
    spec = _modulation_spec(params["modulation"])
    drive = _drive_spec(params["drive"])
    K = int(params.get("K", 5))
    t_f = as_number(params, "t_f")
    w = (K + 0.5) * spec.Omega
    return {"spec": spec, "drive": drive, "t_f": t_f, "K": K,
            "gamma": float(params.get("gamma", 1.0)),
            "n_t": int(params.get("n_t", 401)),
            "dt": params.get("dt"),
            "omega_min": float(params.get("omega_min", spec.omega0 - w)),
            "omega_max": float(params.get("omega_max", spec.omega0 + w)),
            "n_omega": int(params.get("n_omega", (2 * K + 1) * 201))}


def _build_spectra(params):
    require_keys(params, ("array", "modulation", "omega_min", "omega_max",
                          "n_omega"), (), "params")
    array = _giant_array(params["array"])
    mod = params["modulation"]
    require_keys(mod, ("Omega", "amps"), (), "params.modulation")
    amps = ModulationAmps(
        A=tuple(float(a) * np.exp(1j * float(al)) for a, al in mod["amps"]),
        Omega=as_number(mod, "Omega", "params.modulation"))
    if len(amps.A) != array.N:
        raise ConfigInvalid("params.modulation.amps: need one (A, alpha) "
                            "pair per atom")
    return {"array": array, "amps": amps,
            "omega_min": as_number(params, "omega_min"),
            "omega_max": as_number(params, "omega_max"),
            "n_omega": as_int(params, "n_omega")}


def _build_correlations(params):
    require_keys(params, ("atoms", "gamma_L", "gamma_R", "k0", "Omega",
                          "n_values", "horizon"),
                 ("epsilon", "rabi", "gamma_d", "compute_g2", "drift_tol",
                  "dt"), "params")
    config = _network(params)
    return {"config": config,
            "n_values": tuple(int(n) for n in params["n_values"]),
            "horizon": as_number(params, "horizon"),
            "gamma_d": float(params.get("gamma_d", 1e-3)),
            "compute_g2": bool(params.get("compute_g2", True)),
            "drift_tol": params.get("drift_tol", 0.01),
            "dt": params.get("dt")}


def _build_g2_dynamics(params):
    require_keys(params, ("array", "modulation", "eps", "t_max", "n_t"),
                 ("rabi", "method", "dt"), "params")
    array = _giant_array(params["array"])
    if array.N != 2:
        raise ConfigInvalid("params.array: g2-dynamics needs exactly two "
                            "atoms")
    mod = params["modulation"]
    require_keys(mod, ("A", "Omega"), ("alpha",), "params.modulation")
    A = as_number(mod, "A", "params.modulation")
    alpha = float(mod.get("alpha", 0.0))
    amps = ModulationAmps.two_atom(A, alpha, as_number(mod, "Omega",
                                                       "params.modulation"))
    method = params.get("method", "both")
    if method not in ("analytic", "both"):
        raise ConfigInvalid("params.method must be 'analytic' or 'both'")
    me_config = None
    if method == "both":
        # same physics on the master-equation side: legs at the array
        # positions (k0 = 1 in phase units), cosine amplitude 2A with
        # the opposite phase sign; each leg couples to each direction
        # at rate gamma1D so a single leg has half width gamma1D
        atoms = tuple(
            AtomNode(legs=tuple((float(x), 0.0) for x in row),
                     modulation=(2.0 * A, -alpha if n == 1 else 0.0))
            for n, row in enumerate(array.positions()))
        me_config = NetworkConfig(
            atoms=atoms, gamma_L=array.gamma1D,
            gamma_R=array.gamma1D, k0=1.0, Omega=amps.Omega,
            epsilon=as_number(params, "eps"),
            rabi=_as_complex(params.get("rabi", 0.01), "params.rabi"))
    return {"array": array, "amps": amps,
            "eps": as_number(params, "eps"),
            "t_max": as_number(params, "t_max"),
            "n_t": as_int(params, "n_t"),
            "method": method, "me_config": me_config,
            "dt": params.get("dt")}


def _build_mps_run(params):
    require_keys(params, ("dt", "l", "varphi", "gamma", "rabi", "n_steps"),
                 ("modulation", "d_phys", "chi_max", "svd_tol"), "params")
    rabi = tuple(_as_complex(r, "params.rabi") for r in params["rabi"])
    mod = params.get("modulation", [[0.0, 1.0, 0.0], [0.0, 1.0, 0.0]])
    config = TimeBinConfig(
        dt=as_number(params, "dt"), l=as_int(params, "l"),
        varphi=as_number(params, "varphi"),
        gamma=as_number(params, "gamma"), rabi=rabi,
        modulation=tuple(tuple(float(v) for v in m) for m in mod),
        d_phys=int(params.get("d_phys", 2)),
        chi_max=int(params.get("chi_max", 64)),
        svd_tol=float(params.get("svd_tol", 1e-10)))
    return {"config": config, "n_steps": as_int(params, "n_steps")}


def _build_lattice_run(params):
    require_keys(params, ("N_c", "J", "g", "atom_sites", "packet",
                          "t_max", "n_t", "dt"),
                 ("modulation", "omega_c", "photons", "packet2",
                  "snapshots"), "params")
    mod = params.get("modulation", [[0.0, 1.0, 0.0], [0.0, 1.0, 0.0]])
    config = LatticeConfig(
        N_c=as_int(params, "N_c"), J=as_number(params, "J"),
        g=as_number(params, "g"),
        atom_sites=tuple(int(j) for j in params["atom_sites"]),
        modulation=tuple(tuple(float(v) for v in m) for m in mod),
        omega_c=float(params.get("omega_c", 0.0)))

    def packet_of(block, ctx):
        require_keys(block, ("k0", "sigma", "center"), (), ctx)
        return gaussian_wavepacket(as_number(block, "k0", ctx),
                                   as_number(block, "sigma", ctx),
                                   as_int(block, "center", ctx),
                                   config.N_c)

    p1 = packet_of(params["packet"], "params.packet")
    photons = int(params.get("photons", 2))
    if photons not in (1, 2):
        raise ConfigInvalid("params.photons must be 1 or 2")
    p2 = None
    if photons == 2:
        p2 = (packet_of(params["packet2"], "params.packet2")
              if "packet2" in params else p1)
    snapshots = [float(s) for s in params.get("snapshots", [])]
    t_max = as_number(params, "t_max")
    if any(s < 0 or s > t_max for s in snapshots):
        raise ConfigInvalid("params.snapshots must lie inside [0, t_max]")
    return {"config": config, "p1": p1, "p2": p2, "photons": photons,
            "t_max": t_max, "n_t": as_int(params, "n_t"),
            "dt": as_number(params, "dt"), "snapshots": snapshots}


_BUILDERS = {
    "floquet-optimize": _build_floquet_optimize,
    "emit-spectrum": _build_emit_spectrum,
    "spectra": _build_spectra,
    "correlations": _build_correlations,
    "g2-dynamics": _build_g2_dynamics,
    "mps-run": _build_mps_run,
    "lattice-run": _build_lattice_run,
}


# ------------------------------------------------------------------ runners

def _spectrum_outputs(spec, drive, t_f, gamma, K, n_omega, outdir, files):
    w = (K + 0.5) * spec.Omega
    n = n_omega if n_omega > 0 else (2 * K + 1) * 201
    omega_grid = np.linspace(spec.omega0 - w, spec.omega0 + w, n)
    s = emission_spectrum(spec, drive, t_f, omega_grid, gamma=gamma, K=K)
    path = os.path.join(outdir, "spectrum.csv")
    write_csv(path, ("omega", "intensity"), zip(omega_grid, s))
    files.append(path)
    weights = sideband_weights(omega_grid, s, spec.Omega, K, spec.omega0)
    path = os.path.join(outdir, "sidebands.csv")
    write_csv(path, ("k", "weight"),
              ((k, weights[k]) for k in sorted(weights)))
    files.append(path)
    return weights


def _run_floquet_optimize(built, seed, outdir, files):
    result = optimize_modulation(
        built["target"], built["R"], Omega=built["Omega"],
        omega0=built["omega0"], K=built["K"], budget=built["budget"],
        seed=seed, n_particles=built["n_particles"],
        n_iterations=built["n_iterations"], bound=built["bound"],
        tol=built["tol"], harmonics=built["harmonics"])
    spec = result.spec
    path = os.path.join(outdir, "modulation_spec.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"omega0": spec.omega0, "Omega": spec.Omega,
                   "tones": [{"r": t.r, "a": t.a, "b": t.b}
                             for t in spec.tones]},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    files.append(path)
    extra = {"loss": result.loss, "converged": result.converged,
             "n_evals": result.n_evals}
    if built["drive"] is not None:
        _spectrum_outputs(spec, built["drive"], built["t_f"],
                          built["gamma"], built["K"], built["n_omega"],
                          outdir, files)
    return extra


def _run_emit_spectrum(built, seed, outdir, files):
    t_grid = np.linspace(0.0, built["t_f"], built["n_t"])
    pops = populations(built["spec"], built["drive"], t_grid,
                       dt=built["dt"], gamma=built["gamma"])
    path = os.path.join(outdir, "populations.csv")
    write_csv(path, ("t", "P0g", "P0e", "P1g", "P1e"),
              zip(pops.t, pops.p0g, pops.p0e, pops.p1g, pops.p1e))
    files.append(path)
    omega_grid = np.linspace(built["omega_min"], built["omega_max"],
                             built["n_omega"])
    s = emission_spectrum(built["spec"], built["drive"], built["t_f"],
                          omega_grid, dt=built["dt"],
                          gamma=built["gamma"], K=built["K"])
    path = os.path.join(outdir, "spectrum.csv")
    write_csv(path, ("omega", "intensity"), zip(omega_grid, s))
    files.append(path)
    weights = sideband_weights(omega_grid, s, built["spec"].Omega,
                               built["K"], built["spec"].omega0)
    path = os.path.join(outdir, "sidebands.csv")
    write_csv(path, ("k", "weight"),
              ((k, weights[k]) for k in sorted(weights)))
    files.append(path)
    return {"total_emission": float(np.trapezoid(s, omega_grid))}


def _run_spectra(built, seed, outdir, files):
    array, amps = built["array"], built["amps"]
    omega_grid = np.linspace(built["omega_min"], built["omega_max"],
                             built["n_omega"])
    rows = []
    for w in omega_grid:
        r, t = single_photon_rt(array, w)
        r1 = inelastic_r(array, w, amps, order=1)
        rows.append((w, abs(r) ** 2, abs(t) ** 2, abs(r1) ** 2))
    path = os.path.join(outdir, "spectra.csv")
    write_csv(path, ("omega", "refl", "trans", "refl_plus1"), rows)
    files.append(path)
    return {}


def _run_correlations(built, seed, outdir, files):
    res = filtered_correlations(
        built["config"], built["n_values"], horizon=built["horizon"],
        gamma_d=built["gamma_d"], dt=built["dt"],
        compute_g2=built["compute_g2"], drift_tol=built["drift_tol"])
    path = os.path.join(outdir, "i1.csv")
    write_csv(path, ("n", "intensity"),
              ((n, res.I1[n]) for n in res.n_values))
    files.append(path)
    extra = {}
    if built["compute_g2"]:
        path = os.path.join(outdir, "g2.csv")
        write_csv(path, ("n1", "n2", "value"),
                  ((n1, n2, res.g2[(n1, n2)])
                   for n1 in res.n_values for n2 in res.n_values))
        files.append(path)
        extra = {"entropy": res.entropy,
                 "exp_entropy": float(np.exp(res.entropy)),
                 "effective_dim": res.effective_dim}
    return extra


def _run_g2_dynamics(built, seed, outdir, files):
    t_grid = np.linspace(0.0, built["t_max"], built["n_t"])
    g_an = analytic_g2(built["array"], built["eps"], built["amps"], t_grid)
    header = ["t", "g2_analytic"]
    cols = [t_grid, g_an]
    if built["method"] == "both":
        g_me = reflected_g2(built["me_config"], t_grid, dt=built["dt"])
        header.append("g2_me")
        cols.append(g_me)
    path = os.path.join(outdir, "g2.csv")
    write_csv(path, header, zip(*cols))
    files.append(path)
    g0, g1 = g2_harmonics(built["array"], built["eps"], built["amps"])
    return {"g0": g0, "g1_re": g1.real, "g1_im": g1.imag}


def _run_mps_run(built, seed, outdir, files):
    state, rows = run_timebin(built["config"], built["n_steps"])
    path = os.path.join(outdir, "timebin.csv")
    write_csv(path, ("t", "pop1", "pop2", "flux_L", "flux_R", "max_bond",
                     "discarded_weight"),
              ((r[0], r[1], r[2], r[3], r[4], int(r[5]), r[6])
               for r in rows))
    files.append(path)
    return {"eps_trunc": state.eps_trunc,
            "max_bond": int(max(r[5] for r in rows))}


def _run_lattice_run(built, seed, outdir, files):
    config = built["config"]
    base = np.linspace(0.0, built["t_max"], built["n_t"])
    t_grid = np.unique(np.concatenate([base, built["snapshots"]]))
    if built["photons"] == 2:
        state = init_two_photon(config, built["p1"], built["p2"])
        density, pops = evolve_lattice(config, state, t_grid,
                                       dt=built["dt"])
    else:
        traj, pops = evolve_single(config, built["p1"], t_grid,
                                   dt=built["dt"])
        density = np.abs(traj) ** 2
    header = ["t"] + [f"P_{j}" for j in range(1, config.N_c + 1)]
    path = os.path.join(outdir, "density.csv")
    write_csv(path, header,
              ((t, *row) for t, row in zip(t_grid, density)))
    files.append(path)
    path = os.path.join(outdir, "atoms.csv")
    write_csv(path, ("t", "pop1", "pop2"),
              ((t, p[0], p[1]) for t, p in zip(t_grid, pops)))
    files.append(path)
    if built["snapshots"]:
        rows = []
        for s in built["snapshots"]:
            i = int(np.argmin(np.abs(t_grid - s)))
            rows.extend((t_grid[i], j + 1, density[i, j])
                        for j in range(config.N_c))
        path = os.path.join(outdir, "snapshots.csv")
        write_csv(path, ("t", "j", "P_j"), rows)
        files.append(path)
    return {}


_RUNNERS = {
    "floquet-optimize": _run_floquet_optimize,
    "emit-spectrum": _run_emit_spectrum,
    "spectra": _run_spectra,
    "correlations": _run_correlations,
    "g2-dynamics": _run_g2_dynamics,
    "mps-run": _run_mps_run,
    "lattice-run": _run_lattice_run,
}


def run_scenario(scenario: dict, plot: bool = False) -> dict:
    """Execute one scenario dict; returns the manifest payload."""
    kind = scenario["kind"]
    built = _BUILDERS[kind](scenario["params"])
    outdir = scenario["output_dir"]
    os.makedirs(outdir, exist_ok=True)
    files = []
    t0 = time.time()
    extra = _RUNNERS[kind](built, int(scenario["seed"]), outdir, files)
    manifest = {
        "kind": kind,
        "params": scenario["params"],
        "seed": int(scenario["seed"]),
        "output_dir": outdir,
        "version": VERSION,
        "units": "J" if kind == "lattice-run" else "gamma1D",
        "wall_time_s": round(time.time() - t0, 3),
        "results": extra,
        "files": {os.path.basename(p): file_checksum(p) for p in files},
    }
    write_manifest(os.path.join(outdir, "manifest.json"), manifest)
    if plot:
        from . import plots
        plots.render(kind, outdir)
    return manifest


# ------------------------------------------------------------------ sweep

def _set_path(tree, dotted, value):
    keys = dotted.split(".")
    node = tree
    for key in keys[:-1]:
        node = node[int(key)] if isinstance(node, list) else node[key]
    last = keys[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        if last not in node:
            raise ConfigInvalid(f"grid: path '{dotted}' not in scenario")
        node[last] = value


def _sweep_worker(scenario):
    return run_scenario(scenario)["output_dir"]


def _run_sweep(args) -> int:
    scenario = _load_scenario(args)
    grid = load_config(args.grid)
    for key, vals in grid.items():
        if not isinstance(vals, list) or not vals:
            raise ConfigInvalid(f"grid: '{key}' must map to a non-empty "
                                "list")
    base_out = scenario["output_dir"]
    keys = sorted(grid)
    runs = []
    for i, combo in enumerate(itertools.product(*(grid[k] for k in keys))):
        sub = json.loads(json.dumps(scenario))
        for key, val in zip(keys, combo):
            _set_path(sub, key, val)
        sub["output_dir"] = os.path.join(base_out, f"run-{i:04d}")
        runs.append(sub)
    os.makedirs(base_out, exist_ok=True)
    from concurrent.futures import ProcessPoolExecutor
    jobs = max(1, args.jobs or os.cpu_count() or 1)
    if jobs == 1 or len(runs) == 1:
        dirs = [_sweep_worker(r) for r in runs]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(runs))) as pool:
            dirs = list(pool.map(_sweep_worker, runs))
    write_manifest(os.path.join(base_out, "sweep.json"),
                   {"grid": grid, "runs": dirs, "version": VERSION})
    print(f"sweep: {len(dirs)} runs under {base_out}")
    return 0


# ------------------------------------------------------------------ validate

def _run_validate(args) -> int:
    problems = []
    try:
        scenario = _load_scenario(args)
        _BUILDERS[scenario["kind"]](scenario["params"])
    except (WqedError, ValueError) as exc:
        problems.append(str(exc))
    if problems:
        for p in problems:
            print(f"INVALID: {p}")
        return 1
    print("ok")
    return 0


# -------------------------------------------------------------------- main

def _add_common(sub):
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--config", help="scenario JSON file")
    group.add_argument("--preset", help="shipped preset name, one of: "
                       + ", ".join(presets.names()))


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wqed",
        description="Waveguide-QED frequency-comb scenario runner")
    parser.add_argument("--version", action="version", version=VERSION)
    subs = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        sub = subs.add_parser(kind, help=f"run a {kind} scenario")
        _add_common(sub)
        sub.add_argument("--seed", type=int, default=None)
        sub.add_argument("--out", default=None, help="output directory")
        sub.add_argument("--plot", action="store_true",
                         help="also render PNG plots from the CSVs")
    sub = subs.add_parser("validate", help="check a config without running")
    _add_common(sub)
    sub = subs.add_parser("sweep", help="fan a scenario out over a grid")
    _add_common(sub)
    sub.add_argument("--grid", required=True,
                     help="JSON file mapping dotted paths to value lists")
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--jobs", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "validate":
            return _run_validate(args)
        if args.command == "sweep":
            return _run_sweep(args)
        scenario = _load_scenario(args, expect_kind=args.command)
        manifest = run_scenario(scenario, plot=args.plot)
        print(f"{args.command}: wrote {len(manifest['files'])} files to "
              f"{manifest['output_dir']}")
        return 0
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except WqedError as exc:
        print(f"run failed ({args.command}): {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
