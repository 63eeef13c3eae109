"""End-to-end acceptance checks.

Each test prints one PASS/FAIL line; the numbered criteria cover flux
conservation, closed-form correlation baselines, parity selection,
spectrum shaping, the delayed-feedback MPS run, the cavity lattice,
entropy monotonicity, and byte-level determinism of the presets.
"""

import time

import numpy as np
from scipy.linalg import expm

from wqed.cavity_array import (
    LatticeConfig,
    centroid,
    evolve_lattice,
    evolve_single,
    gaussian_wavepacket,
    init_two_photon,
)
from wqed.chiral_master_equation import (
    AtomNode,
    NetworkConfig,
    filtered_correlations,
    reflected_g2,
)
from wqed.emitter_dynamics import DriveSpec, emission_spectrum, sideband_weights
from wqed.modulation import TargetSpectrum, optimize_modulation
from wqed.mps_timebin import TimeBinConfig, init_vacuum, observables, step
from wqed.scattering import (
    GiantArray,
    ModulationAmps,
    analytic_g2,
    inelastic_r,
    single_photon_rt,
    smatrix_modulated,
)


def report(n, ok, detail):
    print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {n}: {detail}"


def test_criterion_01_flux_conservation():
    rng = np.random.default_rng(20240817)
    t0 = time.time()
    worst = 0.0
    for _ in range(200):
        n_atoms = int(rng.integers(1, 4))
        m_legs = int(rng.integers(1, 3))
        topology = rng.choice(["colocated", "separate", "braided"])
        varphi = 0.0 if topology == "colocated" \
            else float(rng.uniform(0.0, 2.0 * np.pi))
        arr = GiantArray(N=n_atoms, M=m_legs, varphi=varphi,
                         topology=str(topology))
        omegas = np.linspace(-3.0, 3.0, 51) + rng.uniform(1e-3, 1e-2)
        for w in omegas:
            r, t = single_photon_rt(arr, float(w))
            worst = max(worst, abs(abs(r) ** 2 + abs(t) ** 2 - 1.0))
    wall = time.time() - t0
    ok = worst < 1e-10 and wall < 5.0
    report(1, ok, f"max | |r|^2+|t|^2 - 1 | = {worst:.2e} over 200 "
           f"random arrays in {wall:.1f}s")


def test_criterion_02_colocated_pair_g2_baseline():
    t0 = time.time()
    t_grid = np.linspace(0.0, 40.0, 161)
    late = t_grid >= 30.0
    worst = 0.0
    details = []
    for delta in (0.0, 1.0, 2.0):
        atoms = tuple(AtomNode(legs=((0.0, 0.0),)) for _ in range(2))
        cfg = NetworkConfig(atoms=atoms, gamma_L=1.0, gamma_R=1.0,
                            k0=1.0, Omega=4.0, epsilon=delta, rabi=0.005)
        g2 = float(reflected_g2(cfg, t_grid)[late].mean())
        target = (1.0 + (delta / 2.0) ** 2) / (1.0 + delta ** 2)
        worst = max(worst, abs(g2 / target - 1.0))
        details.append(f"D={delta:g}: {g2:.4f} vs {target:.4f}")
    wall = time.time() - t0
    ok = worst < 0.05 and wall < 120.0
    report(2, ok, f"{'; '.join(details)} (max rel {worst:.2%}, {wall:.0f}s)")


def test_criterion_03_analytic_vs_me_g2_dynamics():
    t0 = time.time()
    amp, alpha, big_omega, eps = 0.035, np.pi, 4.0, -6.0
    t_grid = np.linspace(0.0, 47.1, 301)
    late = t_grid * big_omega / (2.0 * np.pi) >= 25.0
    worst = 0.0
    for d in (0.1 * np.pi, 0.2 * np.pi, 0.3 * np.pi):
        arr = GiantArray(N=2, M=2, varphi=d, topology="separate")
        amps = ModulationAmps.two_atom(amp, alpha, big_omega)
        ga = analytic_g2(arr, eps, amps, t_grid)
        atoms = tuple(
            AtomNode(legs=tuple((float(x), 0.0) for x in row),
                     modulation=(2.0 * amp, -alpha if n == 1 else 0.0))
            for n, row in enumerate(arr.positions()))
        cfg = NetworkConfig(atoms=atoms, gamma_L=1.0, gamma_R=1.0,
                            k0=1.0, Omega=big_omega, epsilon=eps,
                            rabi=0.01)
        gm = reflected_g2(cfg, t_grid)
        worst = max(worst, float(np.max(np.abs(gm[late] / ga[late] - 1.0))))
    wall = time.time() - t0
    ok = worst < 0.10 and wall < 600.0
    report(3, ok, f"max rel deviation {worst:.2%} over three spacings "
           f"for Omega*t/2pi >= 25 ({wall:.0f}s)")


def _parity_ratio(legs1, legs2):
    atoms = (AtomNode(legs=legs1, modulation=(750.0, 0.0)),
             AtomNode(legs=legs2, modulation=(750.0, np.pi)))
    cfg = NetworkConfig(atoms=atoms, gamma_L=1.0, gamma_R=1.0, k0=1.0,
                        Omega=500.0, epsilon=0.0, rabi=0.02)
    res = filtered_correlations(cfg, range(-3, 4), horizon=50.0,
                                compute_g2=False)
    odd = sum(v for n, v in res.I1.items() if n % 2)
    even = sum(v for n, v in res.I1.items() if not n % 2)
    return odd / even


def test_criterion_04_parity_selection():
    t0 = time.time()
    co = ((0.0, 0.0), (0.0, 0.0))
    ratio_plain = _parity_ratio(co, co)
    phi = 0.5 * np.pi
    ratio_chiral = _parity_ratio(((0.0, 0.0), (2 * phi, np.pi)),
                                 ((phi, 0.0), (3 * phi, np.pi)))
    wall = time.time() - t0
    ok = ratio_plain < 1e-2 and ratio_chiral > 1e2 and wall < 600.0
    report(4, ok, f"odd/even intensity ratio {ratio_plain:.2e} "
           f"(co-located), {ratio_chiral:.2e} (chiral legs) ({wall:.0f}s)")


def _shaping_case(targets, harmonics, stokes):
    target = TargetSpectrum(targets=targets)
    res = optimize_modulation(target, 6, Omega=40.0, K=5, seed=7,
                              harmonics=harmonics)
    grid = np.linspace(-220.0, 220.0, 4401)
    spec = emission_spectrum(res.spec, DriveSpec(xi=0.1, T_d=0.25),
                             14.0, grid)
    weights = sideband_weights(grid, spec, 40.0, 5)
    total = sum(weights.values())
    if stokes:
        bad = sum(v for k, v in weights.items() if k < 0)
    else:
        bad = sum(v for k, v in weights.items() if k % 2)
    return res.loss, bad / total


def test_criterion_05_floquet_shaping():
    t0 = time.time()
    loss_even, frac_odd = _shaping_case(
        {0: 0.6, 2: 0.45, -2: 0.45, 4: 0.3, -4: 0.3}, (2, 4, 6), False)
    wall_even = time.time() - t0
    t0 = time.time()
    loss_as, frac_stokes = _shaping_case(
        {1: 0.86, 2: 0.24, 3: 0.185, 4: 0.135, 5: 0.095}, None, True)
    wall_as = time.time() - t0
    ok = (loss_even <= 1e-4 and loss_as <= 1e-4
          and frac_odd < 0.01 and frac_stokes < 0.01
          and wall_even < 300.0 and wall_as < 300.0)
    report(5, ok, f"losses {loss_even:.1e}/{loss_as:.1e}; stray weight "
           f"odd {frac_odd:.2%}, Stokes {frac_stokes:.2%} "
           f"({wall_even:.0f}s/{wall_as:.0f}s)")


def test_criterion_06_perturbative_consistency():
    t0 = time.time()
    arr = GiantArray(N=1, M=1, varphi=0.0, topology="colocated")
    big_omega = 5.0
    amp = 0.01 * big_omega
    amps = ModulationAmps(A=(amp + 0.0j,), Omega=big_omega)
    worst = 0.0
    for w in np.linspace(-2.0, 2.0, 21):
        direct = inelastic_r(arr, float(w), amps, +1)
        bessel = smatrix_modulated(arr, float(w), 1, amp, big_omega)
        worst = max(worst, abs(direct - bessel) / abs(direct))
    wall = time.time() - t0
    ok = worst < 0.01 and wall < 10.0
    report(6, ok, f"max |direct - Bessel|/|direct| = {worst:.2e} "
           f"at A/Omega = 0.01 ({wall:.1f}s)")


_SM = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)


def _collision_map(config, qubit, n_steps):
    """Exact single-qubit reduced trajectory against fresh vacuum bins."""
    d = config.d_phys
    b = np.diag(np.sqrt(np.arange(1, d)), 1).astype(complex)
    eye_d = np.eye(d, dtype=complex)
    amp, om, ph = config.modulation[qubit]
    om_r = config.rabi[qubit]
    root = np.sqrt(config.gamma * config.dt)

    def kron3(a, c, f):
        return np.kron(np.kron(a, c), f)

    rho = np.zeros((2, 2), dtype=complex)
    rho[0, 0] = 1.0
    vac = np.zeros((d, d), dtype=complex)
    vac[0, 0] = 1.0
    pops = []
    for k in range(n_steps):
        t = k * config.dt
        h1 = amp * np.cos(om * t + ph) * (_SM.conj().T @ _SM) \
            - 0.5 * (om_r * _SM + np.conj(om_r) * _SM.conj().T)
        v = root * (kron3(_SM, b.conj().T, eye_d)
                    + kron3(_SM, eye_d, b.conj().T))
        gen = -1j * config.dt * kron3(h1, eye_d, eye_d) + v - v.conj().T
        u = expm(gen)
        big = u @ np.kron(np.kron(rho, vac), vac) @ u.conj().T
        big = big.reshape(2, d, d, 2, d, d)
        rho = np.einsum("abcdbc->ad", big)
        pops.append(np.real(rho[1, 1]))
    return np.array(pops)


def test_criterion_07_mps_feedback_run():
    t0 = time.time()
    cfg = TimeBinConfig(dt=0.1, l=50, varphi=0.5 * np.pi, gamma=1.0,
                        rabi=(1.5, -1.5j),
                        modulation=((0.5, 1.0, 0.0), (0.5, 1.0, 0.0)),
                        chi_max=64, svd_tol=1e-5)
    n_steps = 150
    state = init_vacuum(cfg, n_steps)
    ora1 = _collision_map(cfg, 0, cfg.l)
    ora2 = _collision_map(cfg, 1, cfg.l)
    pre_err = 0.0
    p1s, p2s = [], []
    for k in range(n_steps):
        step(state, cfg)
        p1, p2, _, _ = observables(state, cfg)
        if k < cfg.l - 1:  # the bin closing the loop arrives at k = l-1
            pre_err = max(pre_err, abs(p1 - ora1[k]), abs(p2 - ora2[k]))
        if k >= cfg.l + 10:
            p1s.append(p1)
            p2s.append(p2)
    wall = time.time() - t0
    m1, m2 = float(np.mean(p1s)), float(np.mean(p2s))
    ok = pre_err < 1e-3 and m1 < m2 and wall < 300.0
    report(7, ok, f"pre-delay oracle error {pre_err:.1e}; post-delay "
           f"means {m1:.3f} < {m2:.3f}; wall {wall:.0f}s at chi_max=64")


def test_criterion_08_lattice_physics():
    t0 = time.time()
    # free-packet centroid speed
    free = LatticeConfig(N_c=249, J=1.0, g=0.0, atom_sites=(120, 130))
    pk = gaussian_wavepacket(np.pi / 2, 8.0, 100, 249)
    times = np.linspace(0.0, 30.0, 16)
    traj, _ = evolve_single(free, pk, times, dt=0.02)
    cents = centroid(np.abs(traj) ** 2)
    speed = float(np.polyfit(times, cents, 1)[0])
    # full two-photon run conserves norm
    cfg = LatticeConfig(N_c=249, J=1.0, g=0.6, atom_sites=(120, 130),
                        modulation=((0.4, 1.8, 0.0), (0.4, 1.8, 0.0)))
    st = init_two_photon(cfg, pk, pk)
    evolve_lattice(cfg, st, [0.0, 60.0], dt=0.02)
    norm_err = abs(st.norm() - 1.0)
    # mid-band single-photon transmission against the S-matrix
    ns = 401
    static = LatticeConfig(N_c=ns, J=1.0, g=0.35, atom_sites=(201, 201))
    pks = gaussian_wavepacket(np.pi / 2, 12.0, 100, ns)
    out, _ = evolve_single(static, pks, [0.0, 100.0], dt=0.02)
    ref, _ = evolve_single(
        LatticeConfig(N_c=ns, J=1.0, g=0.0, atom_sites=(201, 201)),
        pks, [0.0, 100.0], dt=0.02)
    win = np.zeros(ns)
    win[220:] = 1.0
    k_grid = 2 * np.pi * np.fft.fftfreq(ns)
    ft_out = np.fft.fft(out[-1] * win)
    ft_ref = np.fft.fft(ref[-1] * win)
    sel = (k_grid > 0) & (np.abs(ft_ref) > 0.3 * np.abs(ft_ref).max())
    arr = GiantArray(N=2, M=1, varphi=0.0, topology="colocated")
    trans_err = 0.0
    for k, fo, ff in zip(k_grid[sel], ft_out[sel], ft_ref[sel]):
        gamma = 0.35 ** 2 / (2.0 * np.sin(k))
        _, t_an = single_photon_rt(arr, -2.0 * np.cos(k) / gamma)
        trans_err = max(trans_err,
                        abs(abs(fo / ff) ** 2 - abs(t_an) ** 2))
    wall = time.time() - t0
    ok = (abs(speed - 2.0) / 2.0 < 0.02 and norm_err < 1e-6
          and trans_err < 0.03 and wall < 300.0)
    report(8, ok, f"centroid speed {speed:.3f}J; two-photon norm error "
           f"{norm_err:.1e}; transmission error {trans_err:.3f} "
           f"({wall:.0f}s)")


def test_criterion_09_entropy_monotonicity():
    t0 = time.time()
    big_omega = 20.0
    exps = []
    for ratio in (0.25, 0.5, 1.0, 1.5):
        amp = ratio * big_omega
        atoms = (AtomNode(legs=((0.0, 0.0), (0.0, 0.0)),
                          modulation=(amp, 0.0)),
                 AtomNode(legs=((0.0, 0.0), (0.0, 0.0)),
                          modulation=(amp, np.pi)))
        cfg = NetworkConfig(atoms=atoms, gamma_L=1.0, gamma_R=1.0,
                            k0=0.0, Omega=big_omega, epsilon=0.0,
                            rabi=0.02)
        res = filtered_correlations(cfg, (-2, -1, 0, 1, 2), horizon=60.0,
                                    drift_tol=None)
        exps.append(np.exp(res.entropy))
    excess = np.array(exps) - 1.0
    ok = bool(np.all(excess[1:] >= 0.95 * excess[:-1]))
    wall = time.time() - t0
    report(9, ok, "e^S = " + ", ".join(f"{v:.6f}" for v in exps)
           + f" non-decreasing in A/Omega ({wall:.0f}s)")


def test_criterion_10_preset_determinism(tmp_path):
    from wqed import presets
    from wqed.cli import main

    t0 = time.time()
    mismatched = []
    for name in presets.names():
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{name}-{tag}"
            code = main([presets.get(name)["kind"], "--preset", name,
                         "--out", str(out)])
            assert code == 0, f"preset {name} failed"
            outs.append(out)
        for csv in sorted(outs[0].glob("*.csv")):
            twin = outs[1] / csv.name
            if csv.read_bytes() != twin.read_bytes():
                mismatched.append(f"{name}/{csv.name}")
    wall = time.time() - t0
    ok = not mismatched
    report(10, ok, "all preset CSVs byte-identical across reruns "
           f"({wall:.0f}s)" if ok else f"mismatch in {mismatched}")
