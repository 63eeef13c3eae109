"""Master equation for modulated atoms in a chiral 1D waveguide.

Atoms may couple to the waveguide at several points (legs) with
individual coupling phases; left- and right-moving channels can have
unequal rates.  Frequency-filtered correlations are obtained by
attaching weakly coupled detector qubits tuned to individual comb
sidebands, and the two-color entanglement entropy comes from the
singular values of the detector coherence matrix.

Everything is expressed in the frame rotating at the drive frequency;
``epsilon`` is the drive detuning from the atomic carrier and each
detector tuned to sideband n sits at diagonal energy n*Omega - epsilon.
Rates are in units of the single-leg decay unless stated otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import (
    NonPositiveDissipator,
    NotConverged,
    StepTooLarge,
    ZeroMatrix,
)


@dataclass(frozen=True)
class AtomNode:
    """One emitter: coupling legs (x, phi), single-tone modulation
    Delta(t) = A cos(Omega t + alpha), static detuning, optional
    per-node decay overrides."""

    legs: tuple
    modulation: tuple = (0.0, 0.0)
    detuning: float = 0.0
    gamma_L: float | None = None
    gamma_R: float | None = None
    driven: bool = True

    def __post_init__(self):
        if len(self.legs) == 0:
            raise ValueError("an atom needs at least one coupling leg")
        for leg in self.legs:
            if len(leg) != 2 or not np.isfinite(leg[0]):
                raise ValueError("legs must be finite (x, phi) pairs")


@dataclass(frozen=True)
class DetectorPair:
    """Two filter qubits tuned to sidebands n1 and n2."""

    n1: int
    n2: int
    coupling: float = 1e-3
    position: float | None = None


@dataclass(frozen=True)
class NetworkConfig:
    atoms: tuple
    gamma_L: float
    gamma_R: float
    k0: float
    Omega: float
    epsilon: float = 0.0
    rabi: complex = 0.0

    def __post_init__(self):
        if self.gamma_L < 0 or self.gamma_R < 0:
            raise ValueError("decay rates must be >= 0")
        if self.gamma_L == 0 and self.gamma_R == 0:
            raise ValueError("at least one channel must couple")
        if self.Omega <= 0:
            raise ValueError("Omega must be > 0")

    def gamma_total(self) -> float:
        tot = 0.0
        for a in self.atoms:
            gl = self.gamma_L if a.gamma_L is None else a.gamma_L
            gr = self.gamma_R if a.gamma_R is None else a.gamma_R
            tot += (gl + gr) * len(a.legs)
        return tot


class _Site:
    """Internal flat view: one row per qubit (atom or detector)."""

    def __init__(self, legs, gl, gr, amp, alpha, delta, driven):
        self.legs, self.gl, self.gr = legs, gl, gr
        self.amp, self.alpha, self.delta, self.driven = amp, alpha, delta, driven


def _sites(config: NetworkConfig, detectors=None):
    sites = []
    for a in config.atoms:
        gl = config.gamma_L if a.gamma_L is None else a.gamma_L
        gr = config.gamma_R if a.gamma_R is None else a.gamma_R
        amp, alpha = a.modulation
        sites.append(_Site(tuple(a.legs), gl, gr, amp, alpha,
                           a.detuning - config.epsilon, a.driven))
    if detectors is not None:
        x_min = min(x for a in config.atoms for x, _ in a.legs)
        for n in (detectors.n1, detectors.n2):
            if n is None:
                continue
            xd = x_min if detectors.position is None else detectors.position
            gd = detectors.coupling
            sites.append(_Site(((xd, 0.0),), gd, gd, 0.0, 0.0,
                               n * config.Omega - config.epsilon, False))
    return sites


def _lowering_ops(n_sites):
    sm = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    eye = np.eye(2, dtype=complex)
    ops = []
    for i in range(n_sites):
        op = np.array([[1.0]], dtype=complex)
        for j in range(n_sites):
            op = np.kron(op, sm if j == i else eye)
        ops.append(op)
    return ops


def _assemble(config: NetworkConfig, detectors=None):
    sites = _sites(config, detectors)
    n = len(sites)
    dim = 2 ** n
    lower = _lowering_ops(n)
    number = [op.conj().T @ op for op in lower]

    # collective jump operators, one per propagation direction
    c_left = np.zeros((dim, dim), dtype=complex)
    c_right = np.zeros((dim, dim), dtype=complex)
    legs_flat = []
    for i, s in enumerate(sites):
        for x, phi in s.legs:
            legs_flat.append((i, x, phi, s.gl, s.gr))
            phase = np.exp(1j * phi)
            c_left += np.sqrt(s.gl) * np.exp(1j * config.k0 * x) \
                * phase * lower[i]
            c_right += np.sqrt(s.gr) * np.exp(-1j * config.k0 * x) \
                * phase * lower[i]

    # positivity of the collective decay matrix (one block per channel)
    floor = -1e-9 * (config.gamma_L + config.gamma_R)
    for sgn, gidx in ((1.0, 3), (-1.0, 4)):
        mat = np.empty((len(legs_flat), len(legs_flat)), dtype=complex)
        for a, (i, x, phi, gl, gr) in enumerate(legs_flat):
            for b, (j, y, psi, hl, hr) in enumerate(legs_flat):
                ga = (gl, gr)[gidx - 3]
                gb = (hl, hr)[gidx - 3]
                mat[a, b] = np.sqrt(ga * gb) \
                    * np.exp(1j * sgn * config.k0 * (x - y)) \
                    * np.exp(1j * (phi - psi))
        if np.min(np.linalg.eigvalsh(mat)) < floor:
            raise NonPositiveDissipator(
                "collective decay matrix has a negative eigenvalue")

    # waveguide-mediated coherent couplings, strictly position-ordered
    h_wg = np.zeros((dim, dim), dtype=complex)
    for i, x, phi, gl_i, gr_i in legs_flat:
        for j, y, psi, gl_j, gr_j in legs_flat:
            term = None
            if y > x:    # partner leg to the right: left-movers mediate
                term = -0.5j * np.sqrt(gl_i * gl_j)
            elif y < x:  # partner leg to the left: right-movers mediate
                term = -0.5j * np.sqrt(gr_i * gr_j)
            if term is None:
                continue
            amp = term * np.exp(-1j * (phi - psi)) \
                * np.exp(1j * config.k0 * abs(x - y))
            op = amp * (lower[i].conj().T @ lower[j])
            h_wg += op + op.conj().T

    # static detunings and the weak coherent drive (left input)
    h0 = h_wg.copy()
    for i, s in enumerate(sites):
        h0 += s.delta * number[i]
        if s.driven and config.rabi != 0:
            f = sum(np.exp(1j * (config.k0 * x + phi)) for x, phi in s.legs)
            h0 += config.rabi * f * lower[i].conj().T \
                + np.conj(config.rabi * f) * lower[i]

    # time-periodic diagonal: sum_n A_n cos(Omega t + alpha_n) N_n
    dc = np.zeros(dim)
    dsn = np.zeros(dim)
    for i, s in enumerate(sites):
        if s.amp != 0.0:
            diag = np.real(np.diag(number[i]))
            dc += s.amp * np.cos(s.alpha) * diag
            dsn += -s.amp * np.sin(s.alpha) * diag

    jumps = np.stack([c_left, c_right])
    msum = sum(j.conj().T @ j for j in jumps)
    # vectorized generator: vec(L rho) = L0 vec(rho) + periodic diagonal
    eye = np.eye(dim, dtype=complex)
    sup = -1j * (np.kron(h0, eye) - np.kron(eye, h0.T))
    sup -= 0.5 * (np.kron(msum, eye) + np.kron(eye, msum.T))
    for j in jumps:
        sup += np.kron(j, j.conj())
    mvec_c = -1j * (dc[:, None] - dc[None, :]).ravel().astype(complex)
    mvec_s = -1j * (dsn[:, None] - dsn[None, :]).ravel().astype(complex)
    return {
        "sites": sites, "dim": dim, "lower": lower, "number": number,
        "h0": h0, "dc": dc, "ds": dsn, "jumps": jumps, "msum": msum,
        "sup": np.ascontiguousarray(sup), "mc": mvec_c, "ms": mvec_s,
    }


def build_generators(config: NetworkConfig, t: float, detectors=None):
    """Hamiltonian at time t and the directional jump operators.

    The returned jump operators carry the per-leg root rates, so each
    is paired with unit rate.
    """
    parts = _assemble(config, detectors)
    h = parts["h0"] + np.diag(np.cos(config.Omega * t) * parts["dc"]
                              + np.sin(config.Omega * t) * parts["ds"])
    return h, [(parts["jumps"][0], 1.0), (parts["jumps"][1], 1.0)]


@njit(cache=True)
def _advance(v, t0, dt, n_steps, sup, mc, ms, omega):
    for i in range(n_steps):
        t = t0 + i * dt
        f1 = np.cos(omega * t) * mc + np.sin(omega * t) * ms
        k1 = sup @ v + f1 * v
        th = t + 0.5 * dt
        fh = np.cos(omega * th) * mc + np.sin(omega * th) * ms
        v2 = v + (0.5 * dt) * k1
        k2 = sup @ v2 + fh * v2
        v3 = v + (0.5 * dt) * k2
        k3 = sup @ v3 + fh * v3
        te = t + dt
        fe = np.cos(omega * te) * mc + np.sin(omega * te) * ms
        v4 = v + dt * k3
        k4 = sup @ v4 + fe * v4
        v += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return v


def _dt_default(config, parts, dt):
    guard = 0.02 * min(1.0 / max(config.gamma_total(), 1e-30),
                       1.0 / config.Omega)
    if dt is None:
        # coherences rotate at sums of per-site rates, so size the step
        # to the two fastest sites combined
        rates = sorted((abs(s.delta) + abs(s.amp) for s in parts["sites"]),
                       reverse=True)
        wmax = max(config.Omega, rates[0] + (rates[1] if len(rates) > 1
                                             else 0.0))
        dt = min(guard, 0.25 / wmax)
    elif dt > guard * (1 + 1e-12):
        raise StepTooLarge(f"dt={dt:g} exceeds guard {guard:g}")
    return dt


def _check_state(rho, label, pop_tol=1e-7):
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-6:
        raise NotConverged(f"trace drifted to {tr:.8f} at {label}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-8:
        raise NotConverged(f"Hermiticity lost at {label}")
    if np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) < -pop_tol:
        raise NotConverged(f"negative population at {label}")


def evolve(config: NetworkConfig, rho0: np.ndarray, t_grid,
           dt: float | None = None, detectors=None) -> np.ndarray:
    """Density-matrix trajectory on t_grid (fixed-step RK4)."""
    t_grid = np.asarray(t_grid, dtype=float)
    parts = _assemble(config, detectors)
    dim = parts["dim"]
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (dim, dim):
        raise ValueError(f"rho0 must be {dim}x{dim} for this network")
    if np.max(np.abs(rho0 - rho0.conj().T)) > 1e-10 \
            or abs(np.trace(rho0) - 1.0) > 1e-10:
        raise ValueError("rho0 must be Hermitian with unit trace")
    dt = _dt_default(config, parts, dt)
    out = np.empty((len(t_grid), dim, dim), dtype=complex)
    v = rho0.ravel().astype(complex)
    t = t_grid[0]
    out[0] = rho0
    for i in range(1, len(t_grid)):
        span = t_grid[i] - t
        n = max(1, int(np.ceil(span / dt)))
        v = _advance(v, t, span / n, n, parts["sup"], parts["mc"],
                     parts["ms"], config.Omega)
        t = t_grid[i]
        out[i] = v.reshape(dim, dim)
    _check_state(out[-1], f"t={t:g}")
    return out


@dataclass
class FilteredCorrelations:
    """Period-averaged filtered intensities and cross-correlations."""

    n_values: tuple
    I1: dict
    g2: dict
    psi: np.ndarray | None
    entropy: float | None
    effective_dim: float | None


def _steady_averages(config, detectors, horizon, dt, observables,
                     freqs=None):
    """Evolve from vacuum and average observables over trailing periods.

    Returns (mean over last 10 periods, mean over the preceding 10)
    for each observable, sampling 16 points per modulation period.
    Coherence-type observables rotate at a known frame frequency; pass
    it in freqs so the sample is demodulated before averaging instead
    of being averaged away.
    """
    parts = _assemble(config, detectors)
    dim = parts["dim"]
    dt = _dt_default(config, parts, dt)
    period = 2 * np.pi / config.Omega
    n_periods = int(np.ceil(horizon / period))
    n_periods = max(n_periods, 21)
    v = np.zeros(dim * dim, dtype=complex)
    v[0] = 1.0  # all qubits in the ground state
    ovecs = [np.ascontiguousarray(o.T.ravel()) for o in observables]
    if freqs is None:
        freqs = np.zeros(len(ovecs))
    sample_dt = period / 16
    steps = max(1, int(np.ceil(sample_dt / dt)))
    h = sample_dt / steps
    n_tail = 10 * 16
    total_samples = n_periods * 16
    lead = total_samples - 2 * n_tail
    v = _advance(v, 0.0, h, lead * steps, parts["sup"], parts["mc"],
                 parts["ms"], config.Omega)
    t = lead * sample_dt
    tail1 = np.zeros(len(ovecs), dtype=complex)
    tail2 = np.zeros(len(ovecs), dtype=complex)
    for i in range(2 * n_tail):
        v = _advance(v, t, h, steps, parts["sup"], parts["mc"],
                     parts["ms"], config.Omega)
        t += sample_dt
        acc = tail2 if i < n_tail else tail1
        for j, o in enumerate(ovecs):
            acc[j] += np.exp(1j * freqs[j] * t) * (o @ v)
    # long horizons accumulate harmless 1e-6-level noise on the
    # fast-rotating coherences; the drift check below is the real gate
    _check_state(v.reshape(dim, dim), f"t={t:g}", pop_tol=1e-5)
    return tail1 / n_tail, tail2 / n_tail


def filtered_correlations(config: NetworkConfig, n_values,
                          horizon: float, gamma_d: float = 1e-3,
                          dt: float | None = None,
                          compute_g2: bool = True,
                          drift_tol: float | None = 0.01
                          ) -> FilteredCorrelations:
    """Sideband-filtered intensities I1[n], cross-correlations
    g2[(n1,n2)], and the two-color coherence matrix via detector qubits.

    One detector run per sideband gives I1; one run per unordered pair
    gives the normalized g2 and the coherence Psi entry.  All values
    are period averages at the end of the horizon.
    """
    if gamma_d > 1e-3 * (config.gamma_L + config.gamma_R) * (1 + 1e-9):
        raise ValueError("detector coupling must stay perturbative")
    n_values = tuple(int(n) for n in n_values)
    period = 2 * np.pi / config.Omega
    horizon = max(horizon, 50.0 / (config.gamma_L + config.gamma_R))
    horizon = period * int(np.ceil(horizon / period))

    n_atoms = len(config.atoms)
    I1 = {}
    for n in n_values:
        det = DetectorPair(n1=n, n2=None, coupling=gamma_d)
        dim = 2 ** (n_atoms + 1)
        num_d = _detector_numbers(n_atoms, 1, dim)[0]
        (v1,), (v0,) = _steady_averages(config, det, horizon, dt, [num_d])
        I1[n] = float(np.real(v1))
    g2 = {}
    psi = None
    entropy = None
    eff = None
    if compute_g2:
        psi = np.zeros((len(n_values), len(n_values)), dtype=complex)
        for i, n1 in enumerate(n_values):
            for j, n2 in enumerate(n_values):
                if j < i:
                    continue
                det = DetectorPair(n1=n1, n2=n2, coupling=gamma_d)
                dim = 2 ** (n_atoms + 2)
                num1, num2 = _detector_numbers(n_atoms, 2, dim)
                low1, low2 = _detector_lowers(n_atoms, 2, dim)
                obs = [num1 @ num2, num1, num2, low1 @ low2]
                # the pair coherence rotates at the sum of the detector
                # frame detunings; demodulate so the average keeps it
                w_coh = (n1 + n2) * config.Omega - 2 * config.epsilon
                (nn, m1, m2, coh), (nn0, m10, m20, _) = _steady_averages(
                    config, det, horizon, dt, obs,
                    freqs=(0.0, 0.0, 0.0, w_coh))
                val = np.real(nn) / max(np.real(m1) * np.real(m2), 1e-300)
                val0 = np.real(nn0) / max(np.real(m10) * np.real(m20), 1e-300)
                if drift_tol is not None and \
                        abs(val - val0) > drift_tol * max(abs(val), 1e-12):
                    raise NotConverged(
                        f"g2[{n1},{n2}] drifts {val0:g} -> {val:g}")
                g2[(n1, n2)] = val
                g2[(n2, n1)] = val
                psi[i, j] = coh
                psi[j, i] = coh
        entropy, eff = entanglement_entropy(psi)
    return FilteredCorrelations(n_values=n_values, I1=I1, g2=g2, psi=psi,
                                entropy=entropy, effective_dim=eff)


def _detector_numbers(n_atoms, n_det, dim):
    lower = _lowering_ops(n_atoms + n_det)
    return [lower[n_atoms + i].conj().T @ lower[n_atoms + i]
            for i in range(n_det)]


def _detector_lowers(n_atoms, n_det, dim):
    lower = _lowering_ops(n_atoms + n_det)
    return [lower[n_atoms + i] for i in range(n_det)]


def reflected_g2(config: NetworkConfig, t_grid,
                 dt: float | None = None) -> np.ndarray:
    """Equal-time g2 of the reflected (left-moving) output field.

    Numerator: <cL+ cL+ cL cL>(t) along the modulated trajectory from
    vacuum.  Denominator: squared reflected flux <cL+ cL> of the same
    network with modulation switched off, evaluated at the same times
    so the turn-on transient enters both factors consistently.  The
    first entry of t_grid is the initial time.
    """
    parts = _assemble(config)
    dim = parts["dim"]
    c_left = parts["jumps"][0]
    num_op = (c_left @ c_left).conj().T @ (c_left @ c_left)
    flux_op = c_left.conj().T @ c_left
    rho0 = np.zeros((dim, dim), dtype=complex)
    rho0[0, 0] = 1.0
    traj = evolve(config, rho0, t_grid, dt=dt)
    numer = np.real(np.einsum("tij,ji->t", traj, num_op))

    frozen = NetworkConfig(
        atoms=tuple(AtomNode(legs=a.legs, modulation=(0.0, 0.0),
                             detuning=a.detuning, gamma_L=a.gamma_L,
                             gamma_R=a.gamma_R, driven=a.driven)
                    for a in config.atoms),
        gamma_L=config.gamma_L, gamma_R=config.gamma_R, k0=config.k0,
        Omega=config.Omega, epsilon=config.epsilon, rabi=config.rabi)
    ref = evolve(frozen, rho0, t_grid, dt=dt)
    flux = np.real(np.einsum("tij,ji->t", ref, flux_op))
    if flux[-1] <= 0.0:
        raise ZeroMatrix("reflected flux vanishes; g2 undefined")
    # before any emission has reached the detector g2 is 0/0; report 0
    out = np.zeros_like(numer)
    live = flux > 0.0
    out[live] = numer[live] / flux[live] ** 2
    return out


def entanglement_entropy(psi: np.ndarray):
    """Entropy of the singular-value distribution of the normalized
    two-color matrix; exp(S) is the effective Schmidt rank."""
    psi = np.asarray(psi, dtype=complex)
    norm = np.linalg.norm(psi)
    if norm == 0.0 or not np.isfinite(norm):
        raise ZeroMatrix("two-color amplitude matrix is zero")
    lam = np.linalg.svd(psi / norm, compute_uv=False)
    p = lam ** 2
    p = p[p > 1e-300]
    s = float(-np.sum(p * np.log(p)))
    return s, float(np.exp(s))
