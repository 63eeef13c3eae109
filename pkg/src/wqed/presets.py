"""Shipped scenario presets reproducing the reference figures.

Each preset is a complete scenario dict (kind, seed, params) that the
CLI can run as-is.  Physical quantities are in units of gamma_1D,
except the lattice preset which uses the hopping J.
"""

from __future__ import annotations

import copy
import math

__all__ = ["names", "get", "PRESETS"]

_PI = math.pi

PRESETS = {
    # Pure even-parity sideband comb: optimize, then emit the spectrum.
    "fig1b": {
        "kind": "floquet-optimize",
        "seed": 7,
        "params": {
            "target": {
                "targets": {"0": 0.6, "2": 0.45, "-2": 0.45,
                            "4": 0.3, "-4": 0.3},
                "background_weight": 0.1,
            },
            "R": 6,
            "K": 5,
            "Omega": 40.0,
            "harmonics": [2, 4, 6],
            "budget": 10000,
            "tol": 1e-4,
            "drive": {"xi": 0.1, "T_d": 2.0, "shape": "rect"},
            "t_f": 14.0,
        },
    },
    # Pure anti-Stokes (blue-only) comb.
    "fig1c": {
        "kind": "floquet-optimize",
        "seed": 7,
        "params": {
            "target": {
                "targets": {"1": 0.86, "2": 0.24, "3": 0.185,
                            "4": 0.135, "5": 0.095},
                "background_weight": 0.1,
            },
            "R": 6,
            "K": 5,
            "Omega": 40.0,
            "budget": 10000,
            "tol": 1e-4,
            "drive": {"xi": 0.1, "T_d": 2.0, "shape": "rect"},
            "t_f": 14.0,
        },
    },
    # Parity-protected single-photon intensities, no chirality:
    # even sidebands survive, odd are suppressed.
    "fig3d": {
        "kind": "correlations",
        "seed": 0,
        "params": {
            "atoms": [
                {"legs": [[0.0, 0.0], [0.0, 0.0]],
                 "modulation": [750.0, 0.0]},
                {"legs": [[0.0, 0.0], [0.0, 0.0]],
                 "modulation": [750.0, _PI]},
            ],
            "gamma_L": 1.0,
            "gamma_R": 1.0,
            "k0": 1.0,
            "Omega": 500.0,
            "epsilon": 0.0,
            "rabi": 0.02,
            "n_values": [-3, -2, -1, 0, 1, 2, 3],
            "horizon": 50.0,
            "compute_g2": False,
        },
    },
    # Chiral counterpart (phi = pi/2, phi_l = 0, phi_r = pi):
    # the parity pattern inverts.
    "fig3e": {
        "kind": "correlations",
        "seed": 0,
        "params": {
            "atoms": [
                {"legs": [[0.0, 0.0], [_PI, _PI]],
                 "modulation": [750.0, 0.0]},
                {"legs": [[0.5 * _PI, 0.0], [1.5 * _PI, _PI]],
                 "modulation": [750.0, _PI]},
            ],
            "gamma_L": 1.0,
            "gamma_R": 1.0,
            "k0": 1.0,
            "Omega": 500.0,
            "epsilon": 0.0,
            "rabi": 0.02,
            "n_values": [-3, -2, -1, 0, 1, 2, 3],
            "horizon": 50.0,
            "compute_g2": False,
        },
    },
    # Two-color entanglement entropy at the strongest modulation point
    # of the phi = 0 curve.
    "fig4a": {
        "kind": "correlations",
        "seed": 0,
        "params": {
            "atoms": [
                {"legs": [[0.0, 0.0], [0.0, 0.0]],
                 "modulation": [30.0, 0.0]},
                {"legs": [[0.0, 0.0], [0.0, 0.0]],
                 "modulation": [30.0, _PI]},
            ],
            "gamma_L": 1.0,
            "gamma_R": 1.0,
            "k0": 0.0,
            "Omega": 20.0,
            "epsilon": 0.0,
            "rabi": 0.02,
            "n_values": [-1, 0, 1],
            "horizon": 50.0,
            "compute_g2": True,
            "drift_tol": None,
        },
    },
    # Analytic vs master-equation equal-time g2 of the reflected field.
    "fig4b": {
        "kind": "g2-dynamics",
        "seed": 0,
        "params": {
            "array": {"N": 2, "M": 2, "varphi": 0.2 * _PI,
                      "topology": "separate"},
            "modulation": {"A": 0.035, "alpha": _PI, "Omega": 4.0},
            "eps": -6.0,
            "rabi": 0.01,
            "t_max": 47.1,
            "n_t": 301,
            "method": "both",
        },
    },
    # Delayed-feedback time-bin MPS run (two chirally driven qubits).
    "figS6": {
        "kind": "mps-run",
        "seed": 0,
        "params": {
            "dt": 0.1,
            "l": 50,
            "varphi": 0.5 * _PI,
            "gamma": 1.0,
            "rabi": [[1.5, 0.0], [0.0, -1.5]],
            "modulation": [[0.5, 1.0, 0.0], [0.5, 1.0, 0.0]],
            "chi_max": 64,
            "svd_tol": 1e-5,
            "n_steps": 150,
        },
    },
    # Two co-propagating photons scattering off the modulated pair.
    "figS7a": {
        "kind": "lattice-run",
        "seed": 0,
        "params": {
            "N_c": 249,
            "J": 1.0,
            "g": 0.6,
            "atom_sites": [120, 130],
            "modulation": [[0.4, 1.8, 0.0], [0.4, 1.8, 0.0]],
            "photons": 2,
            "packet": {"k0": 0.5 * _PI, "sigma": 8.0, "center": 100},
            "t_max": 60.0,
            "n_t": 121,
            "dt": 0.02,
            "snapshots": [0.0, 12.0, 30.0, 60.0],
        },
    },
}


def names() -> list:
    return sorted(PRESETS)


def get(name: str) -> dict:
    """Deep copy of a preset scenario; KeyError lists valid names."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset '{name}'; available: "
                       f"{', '.join(names())}")
    return copy.deepcopy(PRESETS[name])
