"""Discretized-waveguide transport: qubits coupled to a cavity chain.

The waveguide is a finite tight-binding array with dispersion
omega_k = -2J cos k (band width 4J); two modulated qubits couple
locally to single cavities.  Dynamics are integrated exactly in the
one- or two-excitation sector with a matrix-free RK4 stencil, in the
frame rotating at the cavity frequency.

Two-photon amplitudes Phi are kept as a full symmetric matrix with
norm 2*sum|Phi|^2 + sum|C|^2 + |W|^2 = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NormDrift, TooCloseToEdge

_MAX_DT_J = 0.02


@dataclass(frozen=True)
class LatticeConfig:
    """Finite cavity chain with two locally coupled modulated qubits.

    atom_sites are 1-based cavity indices; modulation holds one
    (A, Omega, phase) triple per qubit, entering as the detuning
    A cos(Omega t + phase) from the band center.
    """

    N_c: int
    J: float
    g: float
    atom_sites: tuple
    modulation: tuple = ((0.0, 1.0, 0.0), (0.0, 1.0, 0.0))
    omega_c: float = 0.0

    def __post_init__(self):
        if self.N_c < 3:
            raise ValueError("need at least three cavities")
        if self.J <= 0:
            raise ValueError("J must be > 0")
        if len(self.atom_sites) != 2 or len(self.modulation) != 2:
            raise ValueError("exactly two qubits are supported")
        for j in self.atom_sites:
            if not 1 <= j <= self.N_c:
                raise ValueError("atom sites must lie inside the chain")
        for amp, _, _ in self.modulation:
            if abs(amp) >= 2 * self.J:
                raise ValueError("modulation amplitude must stay inside "
                                 "the band (|A| < 2J)")

    def center(self) -> int:
        return (self.N_c + 1) // 2


@dataclass
class TwoExcitationState:
    """Phi: symmetric photon-photon amplitudes; C: atom-photon rows;
    W: both-atoms-excited amplitude."""

    Phi: np.ndarray
    C: np.ndarray
    W: complex

    def norm(self) -> float:
        return float(np.sqrt(2 * np.sum(np.abs(self.Phi) ** 2)
                             + np.sum(np.abs(self.C) ** 2)
                             + abs(self.W) ** 2))

    def photon_density(self) -> np.ndarray:
        return (4 * np.sum(np.abs(self.Phi) ** 2, axis=1)
                + np.sum(np.abs(self.C) ** 2, axis=0))

    def atom_populations(self) -> np.ndarray:
        return (np.sum(np.abs(self.C) ** 2, axis=1)
                + abs(self.W) ** 2 * np.ones(2))


def gaussian_wavepacket(k0: float, sigma: float, center: int,
                        N_c: int) -> np.ndarray:
    """Normalized single-photon Gaussian envelope with carrier k0."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    if center - 3 * sigma < 1 or center + 3 * sigma > N_c:
        raise TooCloseToEdge(
            f"packet at {center} with sigma={sigma:g} touches the edges")
    j = np.arange(1, N_c + 1)
    psi = np.exp(-((j - center) ** 2) / (2 * sigma ** 2)
                 + 1j * k0 * j)
    return psi / np.linalg.norm(psi)


def init_two_photon(config: LatticeConfig, packet1, packet2
                    ) -> TwoExcitationState:
    """Symmetrized product of two single-photon packets; C = W = 0."""
    p1 = np.asarray(packet1, dtype=complex)
    p2 = np.asarray(packet2, dtype=complex)
    if p1.shape != (config.N_c,) or p2.shape != (config.N_c,):
        raise ValueError("packets must have one amplitude per cavity")
    phi = 0.5 * (np.outer(p1, p2) + np.outer(p2, p1))
    phi /= np.sqrt(2 * np.sum(np.abs(phi) ** 2))
    return TwoExcitationState(Phi=phi, C=np.zeros((2, config.N_c),
                                                  dtype=complex),
                              W=0.0 + 0.0j)


def _hop(vec, J):
    out = np.zeros_like(vec)
    out[..., 1:] += vec[..., :-1]
    out[..., :-1] += vec[..., 1:]
    return -J * out


def _deltas(config, t):
    return np.array([amp * np.cos(om * t + ph)
                     for amp, om, ph in config.modulation])


def _rhs_two(config, phi, c, w, t):
    j1, j2 = (config.atom_sites[0] - 1, config.atom_sites[1] - 1)
    g = config.g
    delta = _deltas(config, t)

    dphi = _hop(phi, config.J) + _hop(phi.T, config.J).T
    for n, jn in enumerate((j1, j2)):
        dphi[jn, :] += 0.5 * g * c[n, :]
        dphi[:, jn] += 0.5 * g * c[n, :]

    dc = _hop(c, config.J) + delta[:, None] * c
    dc[0, :] += 2 * g * phi[j1, :]
    dc[1, :] += 2 * g * phi[j2, :]
    dc[1, j1] += g * w
    dc[0, j2] += g * w

    dw = (delta[0] + delta[1]) * w + g * (c[1, j1] + c[0, j2])
    return -1j * dphi, -1j * dc, -1j * dw


def evolve_lattice(config: LatticeConfig, state: TwoExcitationState,
                   t_grid, dt: float):
    """Integrate the two-excitation sector over t_grid.

    Returns (density, populations): density[i] is P_j at t_grid[i],
    populations[i] the two atomic excitation probabilities.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if dt > _MAX_DT_J / config.J:
        raise ValueError(f"dt must be <= {_MAX_DT_J}/J")
    phi, c, w = state.Phi.copy(), state.C.copy(), state.W
    norm0 = state.norm()
    density = np.empty((len(t_grid), config.N_c))
    pops = np.empty((len(t_grid), 2))
    t = t_grid[0]
    for i, t_target in enumerate(t_grid):
        while t < t_target - 1e-12:
            h = min(dt, t_target - t)
            phi, c, w = _rk4_two(config, phi, c, w, t, h)
            t += h
        snap = TwoExcitationState(Phi=phi, C=c, W=w)
        if abs(snap.norm() - norm0) > 1e-5:
            raise NormDrift(f"norm drifted by "
                            f"{abs(snap.norm() - norm0):.2e} at t={t:g}")
        density[i] = snap.photon_density()
        pops[i] = snap.atom_populations()
    state.Phi, state.C, state.W = phi, c, w
    return density, pops


def _rk4_two(config, phi, c, w, t, h):
    k1 = _rhs_two(config, phi, c, w, t)
    k2 = _rhs_two(config, phi + 0.5 * h * k1[0], c + 0.5 * h * k1[1],
                  w + 0.5 * h * k1[2], t + 0.5 * h)
    k3 = _rhs_two(config, phi + 0.5 * h * k2[0], c + 0.5 * h * k2[1],
                  w + 0.5 * h * k2[2], t + 0.5 * h)
    k4 = _rhs_two(config, phi + h * k3[0], c + h * k3[1],
                  w + h * k3[2], t + h)
    phi = phi + (h / 6) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    c = c + (h / 6) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    w = w + (h / 6) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    return phi, c, w


def _rhs_single(config, phi, c, t):
    j1, j2 = (config.atom_sites[0] - 1, config.atom_sites[1] - 1)
    g = config.g
    delta = _deltas(config, t)
    dphi = _hop(phi, config.J)
    dphi[j1] += g * c[0]
    dphi[j2] += g * c[1]
    dc = delta * c + g * np.array([phi[j1], phi[j2]])
    return -1j * dphi, -1j * dc


def evolve_single(config: LatticeConfig, packet, t_grid, dt: float):
    """Single-excitation transport of one photon packet.

    Returns (amplitudes, populations): amplitudes[i] is the photonic
    wavefunction at t_grid[i], populations[i] the atomic excitations.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if dt > _MAX_DT_J / config.J:
        raise ValueError(f"dt must be <= {_MAX_DT_J}/J")
    phi = np.asarray(packet, dtype=complex).copy()
    c = np.zeros(2, dtype=complex)
    norm0 = np.sqrt(np.sum(np.abs(phi) ** 2) + np.sum(np.abs(c) ** 2))
    traj = np.empty((len(t_grid), config.N_c), dtype=complex)
    pops = np.empty((len(t_grid), 2))
    t = t_grid[0]
    for i, t_target in enumerate(t_grid):
        while t < t_target - 1e-12:
            h = min(dt, t_target - t)
            k1 = _rhs_single(config, phi, c, t)
            k2 = _rhs_single(config, phi + 0.5 * h * k1[0],
                             c + 0.5 * h * k1[1], t + 0.5 * h)
            k3 = _rhs_single(config, phi + 0.5 * h * k2[0],
                             c + 0.5 * h * k2[1], t + 0.5 * h)
            k4 = _rhs_single(config, phi + h * k3[0], c + h * k3[1],
                             t + h)
            phi = phi + (h / 6) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            c = c + (h / 6) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            t += h
        norm = np.sqrt(np.sum(np.abs(phi) ** 2) + np.sum(np.abs(c) ** 2))
        if abs(norm - norm0) > 1e-5:
            raise NormDrift(f"norm drifted by {abs(norm - norm0):.2e} "
                            f"at t={t:g}")
        traj[i] = phi
        pops[i] = np.abs(c) ** 2
    return traj, pops


def centroid(density) -> np.ndarray:
    """Mean cavity index of a (T, N_c) occupation array, 1-based."""
    density = np.atleast_2d(density)
    j = np.arange(1, density.shape[1] + 1)
    weight = density.sum(axis=1)
    return (density @ j) / np.where(weight > 0, weight, 1.0)
