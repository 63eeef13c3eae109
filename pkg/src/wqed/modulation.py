"""Periodic frequency modulations and their sideband spectra.

A qubit whose transition frequency is modulated as

    delta(t) = sum_r [ a_r cos(r W t) - b_r sin(r W t) ]

acquires the periodic phase factor

    phase(t) = exp(-i int_0^t delta) ,   |phase(t)| = 1,

whose Fourier components set the weights of the emission sidebands at
omega0 + k*W.  Sideband index k > 0 is the blue (anti-Stokes) side.
This module computes the spectrum, scores it against a target, and
synthesizes modulations matching a target by a particle-swarm + BFGS
hybrid search.

Convention: ``components[k]`` multiplies exp(-i k W t) in the Fourier
series of phase(t), so that k > 0 is emitted above the carrier.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize
from scipy.special import jv

from .errors import TruncationTooSmall

__all__ = [
    "Tone",
    "ModulationSpec",
    "FloquetSpectrum",
    "TargetSpectrum",
    "OptimizationResult",
    "floquet_phase",
    "modulation_waveform",
    "fourier_components",
    "fourier_components_bessel",
    "spectrum_loss",
    "spectrum_loss_grad",
    "optimize_modulation",
]


@dataclass(frozen=True)
class Tone:
    """One harmonic of the drive: amplitude of cos(r W t) and -sin(r W t)."""

    r: int
    a: float
    b: float = 0.0

    def __post_init__(self):
        if self.r < 1:
            raise ValueError(f"harmonic index must be >= 1, got {self.r}")


@dataclass(frozen=True)
class ModulationSpec:
    """Multi-tone periodic modulation of a qubit transition frequency.

    All frequencies are in units of the single-emitter decay rate unless
    the caller says otherwise; only ratios enter the spectrum.
    """

    omega0: float
    Omega: float
    tones: tuple[Tone, ...] = ()

    def __post_init__(self):
        if self.Omega <= 0:
            raise ValueError("fundamental modulation frequency must be > 0")
        object.__setattr__(self, "tones", tuple(
            t if isinstance(t, Tone) else Tone(*t) for t in self.tones))
        rs = [t.r for t in self.tones]
        if len(set(rs)) != len(rs):
            raise ValueError(f"harmonic indices must be distinct, got {rs}")

    @property
    def R(self) -> int:
        return len(self.tones)

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.Omega

    def max_rate(self) -> float:
        """Largest instantaneous frequency scale of the waveform."""
        amp = sum(abs(t.a) + abs(t.b) for t in self.tones)
        rmax = max((t.r for t in self.tones), default=1)
        return max(rmax * self.Omega, amp)

    @classmethod
    def from_polar(cls, omega0, Omega, polar_tones):
        """Build from (r, A_r, alpha_r) tones, delta = sum A cos(r W t + alpha)."""
        tones = tuple(Tone(r, A * np.cos(al), A * np.sin(al))
                      for r, A, al in polar_tones)
        return cls(omega0, Omega, tones)


def modulation_waveform(spec: ModulationSpec, t):
    """delta(t), the instantaneous frequency shift."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for tone in spec.tones:
        w = tone.r * spec.Omega
        out = out + tone.a * np.cos(w * t) - tone.b * np.sin(w * t)
    return out


def _phase_integral(spec: ModulationSpec, t):
    """int_0^t delta(s) ds, evaluated in closed form."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for tone in spec.tones:
        w = tone.r * spec.Omega
        out = out + tone.a / w * np.sin(w * t) + tone.b / w * (np.cos(w * t) - 1.0)
    return out


def floquet_phase(spec: ModulationSpec, t):
    """Periodic excited-state phase factor, exactly unimodular."""
    return np.exp(-1j * _phase_integral(spec, t))


@dataclass
class FloquetSpectrum:
    """Sideband amplitudes of the Floquet phase, k in [-K, K]."""

    K: int
    values: np.ndarray  # complex, index k + K

    def __getitem__(self, k: int) -> complex:
        if abs(k) > self.K:
            raise KeyError(f"sideband {k} outside truncation K={self.K}")
        return complex(self.values[k + self.K])

    @property
    def k(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    def magnitudes(self) -> np.ndarray:
        return np.abs(self.values)

    def parseval_sum(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))


def _num_samples(spec: ModulationSpec, K: int) -> int:
    need = 16.0 * (K + spec.max_rate() / spec.Omega)
    n = 4096
    while n < need:
        n *= 2
    return n


def fourier_components(spec: ModulationSpec, K: int,
                       n_samples: int | None = None,
                       check: bool = True) -> FloquetSpectrum:
    """Sideband amplitudes by DFT of the phase factor over one period.

    Raises TruncationTooSmall when the window [-K, K] misses more than
    1e-4 of the total (unit) spectral weight.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    n = n_samples or _num_samples(spec, K)
    t = np.arange(n) * (spec.period / n)
    w = floquet_phase(spec, t)
    # coefficients of exp(-i k W t): c_k = (1/n) sum_j w_j e^{+2pi i jk/n}
    c = np.fft.ifft(w)
    values = np.empty(2 * K + 1, dtype=complex)
    for k in range(-K, K + 1):
        values[k + K] = c[k % n]
    spectrum = FloquetSpectrum(K=K, values=values)
    if check and spectrum.parseval_sum() < 1.0 - 1e-4:
        raise TruncationTooSmall(
            f"sum |X_k|^2 = {spectrum.parseval_sum():.6f} < 1 - 1e-4 at K={K}")
    return spectrum


def fourier_components_bessel(spec: ModulationSpec, K: int) -> FloquetSpectrum:
    """Sideband amplitudes from the constrained Bessel-product sum.

    Cross-check path; cost grows combinatorially, intended for R <= 2.
    """
    if spec.R > 2:
        raise ValueError("Bessel-sum path is only practical for R <= 2")
    W = spec.Omega
    # per-tone expansions: exp(-i x sin) -> (-1)^g J_g(x) e^{i g th},
    #                      exp(-i y cos) -> (-i)^q J_q(y) e^{i q th}
    factors = []  # list of (harmonic r, coeff array, order offset L)
    prefactor = 1.0 + 0.0j
    for tone in spec.tones:
        w = tone.r * W
        x, y = tone.a / w, tone.b / w
        prefactor *= np.exp(1j * y)
        L = int(np.ceil(max(abs(x), abs(y)))) + 25
        g = np.arange(-L, L + 1)
        cs = (-1.0) ** g * jv(g, x)
        cc = (-1j) ** g * jv(g, y)
        factors.append((tone.r, cs, L))
        factors.append((tone.r, cc, L))
    # accumulate the distribution over total harmonic m (coefficient of e^{i m W t})
    acc = {0: prefactor}
    for r, coeffs, L in factors:
        new: dict[int, complex] = {}
        for m, amp in acc.items():
            for idx, c in enumerate(coeffs):
                if abs(c) < 1e-18:
                    continue
                key = m + r * (idx - L)
                new[key] = new.get(key, 0.0) + amp * c
        acc = new
    # e^{i m W t} content of phase(t) is sideband k = -m in this package's
    # convention (components[k] multiplies e^{-i k W t})
    values = np.array([acc.get(-k, 0.0) for k in range(-K, K + 1)], dtype=complex)
    return FloquetSpectrum(K=K, values=values)


@dataclass
class TargetSpectrum:
    """Desired sideband magnitudes |X_k| with per-sideband weights.

    Sidebands inside [-K, K] that are neither targeted nor listed in
    ``dont_care`` are pushed toward zero with ``background_weight``.
    """

    targets: dict[int, float]
    weights: dict[int, float] = field(default_factory=dict)
    dont_care: frozenset[int] = frozenset()
    background_weight: float = 0.1

    def __post_init__(self):
        total = sum(v * v for v in self.targets.values())
        if total > 1.0 + 1e-9:
            raise ValueError(f"sum of target magnitudes^2 = {total:.6f} > 1")
        for k, w in self.weights.items():
            if w < 0:
                raise ValueError(f"negative weight for sideband {k}")

    def weight_of(self, k: int) -> float:
        if k in self.weights:
            return self.weights[k]
        if k in self.targets:
            return 1.0
        if k in self.dont_care:
            return 0.0
        return self.background_weight

    def target_of(self, k: int) -> float:
        return self.targets.get(k, 0.0)

    def arrays(self, K: int):
        k = np.arange(-K, K + 1)
        tgt = np.array([self.target_of(int(i)) for i in k])
        wgt = np.array([self.weight_of(int(i)) for i in k])
        return tgt, wgt


def spectrum_loss(spec: ModulationSpec, target: TargetSpectrum, K: int,
                  n_samples: int | None = None) -> float:
    """Weighted squared mismatch of sideband magnitudes."""
    if K < max((abs(k) for k in target.targets), default=1):
        raise ValueError("K does not cover all target sidebands")
    spectrum = fourier_components(spec, K, n_samples=n_samples, check=False)
    tgt, wgt = target.arrays(K)
    return float(np.sum(wgt * (spectrum.magnitudes() - tgt) ** 2))


def _loss_grad_raw(params, harmonics, Omega, tgt, wgt, K, n):
    """Loss and gradient w.r.t. the flat (a_1..a_R, b_1..b_R) vector."""
    R = len(harmonics)
    a, b = params[:R], params[R:]
    t = np.arange(n) * (2.0 * np.pi / Omega / n)
    rw = np.outer(harmonics, Omega * t)  # (R, n)
    sin_t, cos_t = np.sin(rw), np.cos(rw)
    inv = 1.0 / (harmonics * Omega)
    expo = (a * inv) @ sin_t + (b * inv) @ (cos_t - 1.0)
    w = np.exp(-1j * expo)
    c = np.fft.ifft(w)
    idx = np.array([k % n for k in range(-K, K + 1)])
    X = c[idx]
    mag = np.abs(X)
    diff = mag - tgt
    loss = float(np.sum(wgt * diff ** 2))
    # dX_k/dp = ifft(dw/dp)[k];  d|X|/dp = Re(conj(X) dX)/|X|
    safe = np.where(mag > 1e-14, mag, 1.0)
    front = np.where(mag > 1e-14, 2.0 * wgt * diff / safe, 0.0)
    grad = np.empty(2 * R)
    for i in range(R):
        dw_a = -1j * inv[i] * sin_t[i] * w
        dw_b = -1j * inv[i] * (cos_t[i] - 1.0) * w
        dXa = np.fft.ifft(dw_a)[idx]
        dXb = np.fft.ifft(dw_b)[idx]
        grad[i] = np.sum(front * np.real(np.conj(X) * dXa))
        grad[R + i] = np.sum(front * np.real(np.conj(X) * dXb))
    return loss, grad


def spectrum_loss_grad(spec: ModulationSpec, target: TargetSpectrum, K: int,
                       n_samples: int | None = None):
    """(loss, gradient) with the gradient ordered (a_r..., b_r...) by tone."""
    n = n_samples or _num_samples(spec, K)
    harmonics = np.array([t.r for t in spec.tones], dtype=float)
    params = np.array([t.a for t in spec.tones] + [t.b for t in spec.tones])
    tgt, wgt = target.arrays(K)
    return _loss_grad_raw(params, harmonics, spec.Omega, tgt, wgt, K, n)


@dataclass
class OptimizationResult:
    spec: ModulationSpec
    loss: float
    converged: bool
    n_evals: int


def optimize_modulation(target: TargetSpectrum, R: int, *,
                        Omega: float = 1.0, omega0: float = 0.0, K: int = 5,
                        budget: int = 10_000, seed: int = 0,
                        n_particles: int = 40, n_iterations: int = 200,
                        bound: float | None = None, tol: float = 1e-4,
                        harmonics: Sequence[int] | None = None) -> OptimizationResult:
    """Match a target sideband spectrum with an R-tone modulation.

    Particle-swarm global search followed by BFGS polish (analytic
    gradient) of the best particles, then multi-start BFGS restarts
    until ``tol`` is reached or the budget runs out.  Deterministic
    given seed.  ``harmonics`` restricts the tone indices (for example
    even-only tones force an even-parity sideband spectrum); default is
    1..R.  Sets ``converged=False`` when the best loss stays above tol.
    """
    if R < 1:
        raise ValueError("R must be >= 1")
    if budget < 1000:
        raise ValueError("budget must allow at least 1e3 loss evaluations")
    if harmonics is None:
        harmonics = range(1, R + 1)
    harm = tuple(int(r) for r in harmonics)
    if not harm or any(r < 1 or r > R for r in harm) or len(set(harm)) != len(harm):
        raise ValueError("harmonics must be distinct integers in 1..R")
    rng = np.random.default_rng(seed)
    harmonics = np.array(harm, dtype=float)
    bound = 4.0 * Omega if bound is None else bound
    n_tones = len(harm)
    dim = 2 * n_tones
    tgt, wgt = target.arrays(K)
    n = _num_samples(ModulationSpec(omega0, Omega,
                                    tuple(Tone(r, bound, bound) for r in harm)), K)

    evals = 0

    def loss_of(p):
        nonlocal evals
        evals += 1
        l, _ = _loss_grad_raw(p, harmonics, Omega, tgt, wgt, K, n)
        return l

    def loss_grad_of(p):
        nonlocal evals
        evals += 1
        return _loss_grad_raw(p, harmonics, Omega, tgt, wgt, K, n)

    # --- particle swarm stage -------------------------------------------
    pso_budget = max(budget - 3000, budget // 2)
    iters = min(n_iterations, max(1, pso_budget // n_particles - 1))
    pos = rng.uniform(-bound, bound, size=(n_particles, dim))
    pos[0] = 0.0  # always seed the trivial modulation
    vel = rng.uniform(-bound, bound, size=(n_particles, dim)) * 0.1
    pbest = pos.copy()
    pbest_f = np.array([loss_of(p) for p in pos])
    g = int(np.argmin(pbest_f))
    gbest, gbest_f = pbest[g].copy(), pbest_f[g]
    w_inertia, c1, c2 = 0.72, 1.5, 1.5
    for _ in range(iters):
        r1 = rng.random((n_particles, dim))
        r2 = rng.random((n_particles, dim))
        vel = (w_inertia * vel + c1 * r1 * (pbest - pos)
               + c2 * r2 * (gbest[None, :] - pos))
        pos = np.clip(pos + vel, -bound, bound)
        f = np.array([loss_of(p) for p in pos])
        improved = f < pbest_f
        pbest[improved] = pos[improved]
        pbest_f[improved] = f[improved]
        g = int(np.argmin(pbest_f))
        if pbest_f[g] < gbest_f:
            gbest, gbest_f = pbest[g].copy(), pbest_f[g]
        if gbest_f < 1e-12 or evals >= pso_budget:
            break

    # --- quasi-Newton polish --------------------------------------------
    order = np.argsort(pbest_f)
    best_p, best_f = gbest, gbest_f
    for i in order[:3]:
        res = optimize.minimize(
            loss_grad_of, pbest[i], jac=True, method="BFGS",
            options={"maxiter": 400, "gtol": 1e-14})
        if res.fun < best_f:
            best_p, best_f = res.x, res.fun
        if best_f <= tol or evals >= budget:
            break

    # --- multi-start restarts against poor swarm basins ------------------
    while best_f > tol and evals < budget:
        res = optimize.minimize(
            loss_grad_of, rng.uniform(-bound, bound, dim), jac=True,
            method="BFGS", options={"maxiter": 800, "gtol": 1e-15})
        if res.fun < best_f:
            best_p, best_f = res.x, res.fun

    tones = tuple(Tone(r, best_p[i], best_p[n_tones + i])
                  for i, r in enumerate(harm))
    spec = ModulationSpec(omega0, Omega, tones)
    return OptimizationResult(spec=spec, loss=float(best_f),
                              converged=bool(best_f <= tol), n_evals=evals)
