"""Green-function scattering stack for arrays of giant atoms.

Single-photon elastic and inelastic amplitudes, Bessel-sum modulated
S-matrices, dressed two-excitation vertices, two-photon Stokes and
anti-Stokes amplitudes at equal detection times, and the analytic
time-dependent pair correlation of the reflected field.

Frequencies are measured in units of the per-leg decay rate gamma1D
unless the array says otherwise; positions carry k0 = 1 so the
propagation phase between adjacent coupling points equals the spacing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import jv

from .errors import (
    QuadratureNotConverged,
    SingularMatrix,
    TruncationTooSmall,
    ClosedFormInvalidPhase,
)

_TOPOLOGIES = ("separate", "braided", "colocated")


@dataclass(frozen=True)
class GiantArray:
    """Linear chain of N identical giant atoms with M legs each.

    positions[n][p] is the coordinate of leg p of atom n in units of
    1/k0, so adjacent-leg spacing equals the propagation phase varphi.
    """

    N: int
    M: int
    varphi: float
    topology: str
    gamma1D: float = 1.0
    omega0: float = 0.0

    def __post_init__(self):
        if self.N < 1 or self.M < 1:
            raise ValueError("need N >= 1 atoms and M >= 1 legs")
        if self.topology not in _TOPOLOGIES:
            raise ValueError(f"topology must be one of {_TOPOLOGIES}")
        if self.gamma1D <= 0:
            raise ValueError("gamma1D must be > 0")
        if self.topology == "colocated" and self.varphi != 0.0:
            raise ValueError("colocated arrays have zero leg spacing")

    def positions(self) -> np.ndarray:
        d = self.varphi
        x = np.zeros((self.N, self.M))
        if self.topology == "separate":
            for n in range(self.N):
                for p in range(self.M):
                    x[n, p] = (n * self.M + p) * d
        elif self.topology == "braided":
            for n in range(self.N):
                for p in range(self.M):
                    x[n, p] = (p * self.N + n) * d
        return x


@dataclass(frozen=True)
class ModulationAmps:
    """Per-atom complex modulation amplitudes A_n and the tone Omega;
    Delta_n(t) = A_n e^{-i Omega t} + conj(A_n) e^{+i Omega t}."""

    A: tuple
    Omega: float

    @classmethod
    def two_atom(cls, A: float, alpha: float, Omega: float):
        return cls(A=(A + 0.0j, A * np.exp(1j * alpha)), Omega=Omega)

    def conjugate_mirror(self):
        """Stokes parameterization: A -> conj(A), Omega -> -Omega."""
        return ModulationAmps(A=tuple(np.conj(a) for a in self.A),
                              Omega=-self.Omega)


def _leg_sums(array: GiantArray):
    x = array.positions()
    vp = np.exp(1j * x).sum(axis=1)   # sum_p e^{+i k0 x_np}
    vm = np.exp(-1j * x).sum(axis=1)  # sum_p e^{-i k0 x_np}
    return vp, vm


def effective_hamiltonian(array: GiantArray) -> np.ndarray:
    """Non-Hermitian single-excitation Hamiltonian of the array."""
    x = array.positions()
    h = np.zeros((array.N, array.N), dtype=complex)
    for m in range(array.N):
        for n in range(array.N):
            phases = np.exp(1j * np.abs(x[m][:, None] - x[n][None, :]))
            h[m, n] = -1j * array.gamma1D * phases.sum()
            if m == n:
                h[m, n] += array.omega0
    return h


def green(array: GiantArray, omega: complex) -> np.ndarray:
    """Dressed Green function G(omega) = (omega - H_eff)^-1."""
    h = effective_hamiltonian(array)
    lam = np.linalg.eigvals(h)
    if np.min(np.abs(omega - lam)) < 1e-9 * array.gamma1D:
        raise SingularMatrix(f"omega={omega:g} sits on a pole of G")
    return np.linalg.inv(omega * np.eye(array.N) - h)


def single_photon_rt(array: GiantArray, omega: float):
    """Elastic reflection and transmission amplitudes (r, t)."""
    g = green(array, omega)
    vp, vm = _leg_sums(array)
    r = -1j * array.gamma1D * (vp @ g @ vp)
    t = 1.0 - 1j * array.gamma1D * (vm @ g @ vp)
    return r, t


def external_line(array: GiantArray, omega: complex,
                  method: str = "general") -> np.ndarray:
    """External-line factors s_n^+(omega) = sum_m G_nm sum_p e^{i x_mp}.

    The closed-form path reproduces the chain formulas for separate and
    braided topologies and is rejected outside their validity phases.
    """
    if method == "general":
        g = green(array, omega)
        vp, _ = _leg_sums(array)
        return g @ vp
    if method != "closed":
        raise ValueError("method must be 'general' or 'closed'")
    gam = array.gamma1D
    h = effective_hamiltonian(array)
    g = green(array, omega)
    phi = array.varphi
    if array.topology == "separate":
        if abs(np.cos(phi / 2)) < 1e-6:
            raise ClosedFormInvalidPhase("separate chain form needs "
                                         "varphi != pi mod 2pi")
        num = (array.omega0 + 2 * gam * np.sin(phi)) * np.eye(array.N) - h
        pref = 1.0 / (1j * gam * (1 + np.exp(-1j * phi)))
        return pref * (num @ g)[0, :]
    if array.topology == "braided":
        if abs(np.cos(phi)) < 1e-6:
            raise ClosedFormInvalidPhase("braided chain form needs "
                                         "varphi != pi/2 mod pi")
        num = (array.omega0 + 2 * gam * np.sin(2 * phi)) * np.eye(array.N) - h
        pref = 1.0 / (1j * gam * (1 + np.exp(-2j * phi)))
        extra = 2 * gam * np.sin(phi) * g[1, :] if array.N > 1 else 0.0
        return pref * ((num @ g)[0, :] + extra)
    raise ClosedFormInvalidPhase("no closed form for colocated arrays")


def inelastic_r(array: GiantArray, omega: float, amps: ModulationAmps,
                order: int) -> complex:
    """First-order inelastic reflection r_{+1} or r_{-1}."""
    if order not in (1, -1):
        raise ValueError("order must be +1 or -1")
    if len(amps.A) != array.N:
        raise ValueError("need one modulation amplitude per atom")
    s_in = external_line(array, omega)
    s_out = external_line(array, omega + order * amps.Omega)
    a = np.asarray(amps.A, dtype=complex)
    if order == -1:
        a = np.conj(a)
    return -1j * array.gamma1D * np.sum(a * s_out * s_in)


def smatrix_modulated(array: GiantArray, omega: float, n: int, A: float,
                      Omega: float, element="r",
                      k_max: int | None = None) -> complex:
    """Sideband S-matrix element S(omega + n*Omega, omega) for
    homogeneous modulation, as a Bessel-weighted sum over the elastic
    amplitude.  `element` picks 'r', 't', or a callable S0(omega)."""
    if callable(element):
        s0 = element
    elif element == "r":
        s0 = lambda w: single_photon_rt(array, w)[0]
    elif element == "t":
        s0 = lambda w: single_photon_rt(array, w)[1]
    else:
        raise ValueError("element must be 'r', 't', or callable")
    z = 2.0 * A / Omega
    if k_max is None:
        k_max = 12
        while (abs(jv(k_max, z)) > 1e-13 or abs(jv(k_max + abs(n), z))
               > 1e-13):
            k_max += 8
    tail = max(abs(jv(k_max + 1, z)), abs(jv(k_max + 1 + abs(n), z)))
    if tail > 1e-12:
        raise TruncationTooSmall(
            f"k_max={k_max} leaves Bessel tail {tail:.2e} > 1e-12")
    total = 0.0 + 0.0j
    for k in range(-k_max, k_max + 1):
        w = jv(k + n, z) * jv(k, z)
        if w != 0.0:
            total += s0(omega - k * Omega) * w
    return total


def _pair_resolvent(array: GiantArray, energy: complex) -> np.ndarray:
    """(energy - H_eff (+) H_eff)^-1 on the two-excitation pair space."""
    h = effective_hamiltonian(array)
    eye = np.eye(array.N)
    ksum = np.kron(h, eye) + np.kron(eye, h)
    lam = np.linalg.eigvals(ksum)
    if np.min(np.abs(energy - lam)) < 1e-9 * array.gamma1D:
        raise SingularMatrix(f"pair energy {energy:g} hits a resonance")
    return np.linalg.inv(energy * np.eye(array.N ** 2) - ksum)


def vertex_M(array: GiantArray, eps: complex) -> np.ndarray:
    """Dressed interaction vertex in the hard-core limit at total
    two-photon energy 2*eps."""
    res = _pair_resolvent(array, 2.0 * eps)
    n = array.N
    xi = np.empty((n, n), dtype=complex)
    for m in range(n):
        for k in range(n):
            xi[m, k] = -1j * res[m * n + m, k * n + k]
    return np.linalg.inv(-1j * xi)


def chi_pm(array: GiantArray, eps: complex, amps: ModulationAmps,
           sign: int) -> np.ndarray:
    """Dressed modulation vertex chi^(+/-) for anti-Stokes (+1) or
    Stokes (-1) two-photon scattering."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    a = np.asarray(amps.A, dtype=complex)
    if sign == -1:
        a = np.conj(a)
    if len(a) != array.N:
        raise ValueError("need one modulation amplitude per atom")
    n = array.N
    eye = np.eye(n)
    r_out = _pair_resolvent(array, 2.0 * eps + sign * amps.Omega)
    r_in = _pair_resolvent(array, 2.0 * eps)
    insert = np.kron(np.diag(a), eye)
    full = r_out @ insert @ r_in
    chi = np.empty((n, n), dtype=complex)
    for m in range(n):
        for k in range(n):
            chi[m, k] = full[m * n + m, k * n + k]
    return chi


class _Rational:
    """Sum of simple poles c_j/(omega - p_j); supports evaluation away
    from its own poles."""

    def __init__(self, poles, coeffs):
        self.poles = np.asarray(poles, dtype=complex)
        self.coeffs = np.asarray(coeffs, dtype=complex)

    def __call__(self, omega):
        return np.sum(self.coeffs / (omega - self.poles))


def _eig_factors(array: GiantArray):
    """Eigen-representation of G and the external lines as pole sums."""
    h = effective_hamiltonian(array)
    lam, vecs = np.linalg.eig(h)
    vinv = np.linalg.inv(vecs)
    vp, _ = _leg_sums(array)
    s_list = []
    for n in range(array.N):
        coeffs = vecs[n, :] * (vinv @ vp)
        s_list.append(_Rational(lam, coeffs))
    g_elem = {}
    for i in range(array.N):
        for j in range(array.N):
            g_elem[(i, j)] = _Rational(lam, vecs[i, :] * vinv[:, j])
    return lam, s_list, g_elem


def _check_separation(points, gamma):
    pts = np.asarray(points)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if abs(pts[i] - pts[j]) < 1e-9 * gamma:
                raise SingularMatrix("residue poles nearly coincide")


def integral_sigma(array: GiantArray, n: int, a: complex, b: complex,
                   method: str = "residue") -> complex:
    """Sigma_n(a,b) = int s_n(omega-a) s_n(b-omega) domega/2pi."""
    lam, s_list, _ = _eig_factors(array)
    sn = s_list[n]
    if method == "residue":
        # close in the upper half-plane: only the b - lambda poles
        _check_separation(np.concatenate([a + lam, b - lam]),
                          array.gamma1D)
        return -1j * np.sum(sn.coeffs * np.array(
            [sn((b - a) - p) for p in lam]))
    return _quad_line(lambda w: sn(w - a) * sn(b - w), lam, a, b)


def integral_ik(array: GiantArray, kind: str, m: int, n: int, k: int,
                a: complex, b: complex, c: complex,
                method: str = "residue") -> complex:
    """Residue integrals over s_m(omega-a) s_n(b-omega) and a dressed
    Green component: kind 'I' uses G~_k(omega-c), kind 'K' uses
    G~_k(c-omega).  k indexes the symmetric decomposition
    G = G~_1 1 + G~_2 sigma_x of a two-atom array."""
    if array.N != 2:
        raise ValueError("symmetric-component integrals need N = 2")
    lam, s_list, g_elem = _eig_factors(array)
    sm, sn = s_list[m], s_list[n]
    gk = g_elem[(0, 0)] if k == 0 else g_elem[(0, 1)]
    if kind == "I":
        if method == "residue":
            _check_separation(
                np.concatenate([a + lam, c + lam, b - lam]), array.gamma1D)
            return -1j * np.sum(sn.coeffs * np.array(
                [sm(b - p - a) * gk(b - p - c) for p in lam]))
        return _quad_line(lambda w: sm(w - a) * sn(b - w) * gk(w - c),
                          lam, a, b, c)
    if kind == "K":
        if method == "residue":
            _check_separation(
                np.concatenate([a + lam, b - lam, c - lam]), array.gamma1D)
            part1 = -1j * np.sum(sn.coeffs * np.array(
                [sm(b - p - a) * gk(c - b + p) for p in lam]))
            part2 = -1j * np.sum(gk.coeffs * np.array(
                [sm(c - p - a) * sn(b - c + p) for p in lam]))
            return part1 + part2
        return _quad_line(lambda w: sm(w - a) * sn(b - w) * gk(c - w),
                          lam, a, b, c)
    raise ValueError("kind must be 'I' or 'K'")


def _quad_line(f, lam, *shifts):
    """Adaptive real-line quadrature cross-check for the residue path."""
    re, re_err = quad(lambda w: f(w).real, -np.inf, np.inf, limit=800,
                      epsabs=1e-12, epsrel=1e-10)
    im, im_err = quad(lambda w: f(w).imag, -np.inf, np.inf, limit=800,
                      epsabs=1e-12, epsrel=1e-10)
    if re_err + im_err > max(1e-7 * abs(re + 1j * im), 1e-9):
        raise QuadratureNotConverged(
            f"line integral error {re_err + im_err:.2e}")
    return (re + 1j * im) / (2 * np.pi)


@dataclass
class TwoPhotonAmplitudeSet:
    """Equal-time two-photon amplitudes S0, S1 (anti-Stokes) and Sm1
    (Stokes) at degenerate input energy eps."""

    S0: complex
    S1: complex
    Sm1: complex
    eps: float
    r: complex
    r1: complex
    rm1: complex


def _delta_kron(i, j):
    return 1.0 if i == j else 0.0


def _s1_incoherent(array, eps, amps):
    gam = array.gamma1D
    Om = amps.Omega
    a = np.asarray(amps.A, dtype=complex)
    s_eps = external_line(array, eps)
    m_eps = vertex_M(array, eps)
    m_shift = vertex_M(array, eps + 0.5 * Om)
    g_shift = green(array, eps + Om)
    chi = chi_pm(array, eps, amps, +1)
    total = 0.0 + 0.0j
    for i in range(2):
        sig_i = integral_sigma(array, i, 0.0, 2 * eps + Om)
        for j in range(2):
            for k in range(2):
                comp = 0 if k == i else 1
                aa = integral_ik(array, "I", k, i, comp,
                                 0.0, 2 * eps + Om, Om)
                comp = 0 if i == k else 1
                bb = integral_ik(array, "K", i, k, comp,
                                 0.0, 2 * eps + Om, 2 * eps)
                total += -2j * gam ** 2 * a[k] * (
                    m_eps[i, j] * (aa + bb) * s_eps[j] ** 2
                    + 2 * m_shift[i, j] * sig_i * s_eps[k] * s_eps[j]
                    * g_shift[k, j])
    for i in range(2):
        sig_i = integral_sigma(array, i, 0.0, 2 * eps + Om)
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    total += -4j * gam ** 2 * m_shift[i, k] * chi[k, l] \
                        * m_eps[l, j] * sig_i * s_eps[j] ** 2
    return total


def two_photon_amplitudes(array: GiantArray, eps: float,
                          amps: ModulationAmps) -> TwoPhotonAmplitudeSet:
    """Equal-time amplitudes for a symmetric pair of giant atoms."""
    if array.N != 2:
        raise ValueError("two-photon amplitude set implemented for N = 2")
    if len(amps.A) != 2:
        raise ValueError("need two modulation amplitudes")
    gam = array.gamma1D
    r, _ = single_photon_rt(array, eps)
    s_eps = external_line(array, eps)
    m_eps = vertex_M(array, eps)
    s0 = 2 * r ** 2
    sig = [integral_sigma(array, n, 0.0, 2 * eps) for n in range(2)]
    s0 += -2j * gam ** 2 * (
        m_eps[0, 0] * (s_eps[0] ** 2 * sig[0] + s_eps[1] ** 2 * sig[1])
        + m_eps[0, 1] * (s_eps[0] ** 2 * sig[1] + s_eps[1] ** 2 * sig[0]))

    r1 = inelastic_r(array, eps, amps, +1)
    rm1 = inelastic_r(array, eps, amps, -1)
    s1 = 4 * r * r1 + _s1_incoherent(array, eps, amps)
    mirror = amps.conjugate_mirror()
    sm1 = 4 * r * rm1 + _s1_incoherent(array, eps, mirror)
    return TwoPhotonAmplitudeSet(S0=s0, S1=s1, Sm1=sm1, eps=eps, r=r,
                                 r1=r1, rm1=rm1)


def analytic_g2(array: GiantArray, eps: float, amps: ModulationAmps,
                t_grid) -> np.ndarray:
    """Equal-time pair correlation g2(t,t) of the reflected field as
    g0 + g1 e^{-i Omega t} + c.c., normalized so the unmodulated
    coherent limit gives unity."""
    amp_set = two_photon_amplitudes(array, eps, amps)
    denom = abs(2 * amp_set.r ** 2) ** 2
    g0 = abs(amp_set.S0) ** 2 / denom
    g1 = (amp_set.S1 * np.conj(amp_set.S0)
          + amp_set.S0 * np.conj(amp_set.Sm1)) / denom
    t = np.asarray(t_grid, dtype=float)
    return np.real(g0 + g1 * np.exp(-1j * amps.Omega * t)
                   + np.conj(g1) * np.exp(1j * amps.Omega * t))


def g2_harmonics(array: GiantArray, eps: float, amps: ModulationAmps):
    """(g0, g1) Fourier components of the equal-time g2."""
    amp_set = two_photon_amplitudes(array, eps, amps)
    denom = abs(2 * amp_set.r ** 2) ** 2
    g0 = abs(amp_set.S0) ** 2 / denom
    g1 = (amp_set.S1 * np.conj(amp_set.S0)
          + amp_set.S0 * np.conj(amp_set.Sm1)) / denom
    return float(g0), complex(g1)
