import json
import os

import numpy as np
import pytest

from wqed import presets
from wqed.cli import main


def write_cfg(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


SPECTRA_CFG = {
    "kind": "spectra",
    "params": {
        "array": {"N": 2, "M": 1, "varphi": 0.0, "topology": "colocated"},
        "modulation": {"Omega": 5.0, "amps": [[0.02, 0.0], [0.02, 0.9]]},
        "omega_min": -4.0,
        "omega_max": 4.0,
        "n_omega": 40,
    },
}

MPS_CFG = {
    "kind": "mps-run",
    "params": {
        "dt": 0.05, "l": 4, "varphi": 0.0, "gamma": 1.0,
        "rabi": [1.0, [0.0, -1.0]], "n_steps": 30,
        "chi_max": 16, "svd_tol": 1e-8,
    },
}

G2D_CFG = {
    "kind": "g2-dynamics",
    "params": {
        "array": {"N": 2, "M": 1, "varphi": 0.0, "topology": "colocated"},
        "modulation": {"A": 0.02, "alpha": 0.7, "Omega": 5.0},
        "eps": 0.5, "t_max": 4.0, "n_t": 21, "method": "analytic",
    },
}


def read_csv(path):
    lines = path.read_bytes().decode("utf-8").split("\r\n")
    header = lines[0].split(",")
    rows = [[float(c) for c in ln.split(",")] for ln in lines[1:] if ln]
    return header, np.array(rows)


class TestValidate:
    def test_valid_config(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, SPECTRA_CFG)
        assert main(["validate", "--config", cfg]) == 0
        assert "ok" in capsys.readouterr().out

    def test_kind_required(self, tmp_path):
        cfg = write_cfg(tmp_path, {"params": {}})
        assert main(["validate", "--config", cfg]) == 1

    def test_invariant_violation_reported(self, tmp_path, capsys):
        bad = json.loads(json.dumps(MPS_CFG))
        bad["params"]["d_phys"] = 1
        cfg = write_cfg(tmp_path, bad)
        assert main(["validate", "--config", cfg]) == 1
        assert "d_phys" in capsys.readouterr().out

    def test_packet_too_close_to_edge(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {
            "kind": "lattice-run",
            "params": {
                "N_c": 41, "J": 1.0, "g": 0.5, "atom_sites": [21, 21],
                "photons": 1,
                "packet": {"k0": 1.5, "sigma": 8.0, "center": 5},
                "t_max": 1.0, "n_t": 3, "dt": 0.02,
            },
        })
        assert main(["validate", "--config", cfg]) == 1
        assert "edge" in capsys.readouterr().out

    def test_all_presets_validate(self, tmp_path, capsys):
        for name in presets.names():
            assert main(["validate", "--preset", name]) == 0, name


class TestConfigErrors:
    def test_missing_key_named(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {
            "kind": "emit-spectrum",
            "params": {
                "modulation": {"tones": []},
                "drive": {"xi": 0.1, "T_d": 2.0},
                "t_f": 14.0,
            },
        })
        assert main(["emit-spectrum", "--config", cfg,
                     "--out", str(tmp_path / "o")]) == 2

    def test_unknown_key_rejected(self, tmp_path, capsys):
        bad = json.loads(json.dumps(SPECTRA_CFG))
        bad["params"]["Omga"] = 1.0
        cfg = write_cfg(tmp_path, bad)
        assert main(["spectra", "--config", cfg,
                     "--out", str(tmp_path / "o")]) == 2
        assert "Omga" in capsys.readouterr().err

    def test_kind_mismatch(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, SPECTRA_CFG)
        assert main(["mps-run", "--config", cfg,
                     "--out", str(tmp_path / "o")]) == 2

    def test_unknown_preset(self, capsys):
        assert main(["validate", "--preset", "fig9z"]) == 1


class TestRunOutputs:
    def test_spectra_flux_conservation(self, tmp_path):
        cfg = write_cfg(tmp_path, SPECTRA_CFG)
        out = tmp_path / "out"
        assert main(["spectra", "--config", cfg, "--out", str(out)]) == 0
        header, rows = read_csv(out / "spectra.csv")
        assert header == ["omega", "refl", "trans", "refl_plus1"]
        assert np.max(np.abs(rows[:, 1] + rows[:, 2] - 1.0)) < 1e-10

    def test_manifest_checksums_match(self, tmp_path):
        cfg = write_cfg(tmp_path, G2D_CFG)
        out = tmp_path / "out"
        assert main(["g2-dynamics", "--config", cfg,
                     "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["units"] == "gamma1D"
        from wqed.io import file_checksum
        for name, digest in manifest["files"].items():
            assert file_checksum(str(out / name)) == digest

    def test_mps_rerun_byte_identical(self, tmp_path):
        cfg = write_cfg(tmp_path, MPS_CFG)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["mps-run", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["mps-run", "--config", cfg, "--out", str(out2)]) == 0
        assert (out1 / "timebin.csv").read_bytes() \
            == (out2 / "timebin.csv").read_bytes()

    def test_lattice_outputs(self, tmp_path):
        cfg = write_cfg(tmp_path, {
            "kind": "lattice-run",
            "params": {
                "N_c": 61, "J": 1.0, "g": 0.5, "atom_sites": [31, 31],
                "photons": 1,
                "packet": {"k0": 1.5707963267948966, "sigma": 5.0,
                           "center": 20},
                "t_max": 8.0, "n_t": 9, "dt": 0.02,
                "snapshots": [0.0, 8.0],
            },
        })
        out = tmp_path / "out"
        assert main(["lattice-run", "--config", cfg,
                     "--out", str(out)]) == 0
        header, rows = read_csv(out / "density.csv")
        assert len(header) == 62
        assert np.all(np.abs(rows[:, 1:].sum(axis=1)
                             + read_csv(out / "atoms.csv")[1][:, 1:]
                             .sum(axis=1) - 1.0) < 1e-5)
        _, snap = read_csv(out / "snapshots.csv")
        assert set(snap[:, 0]) == {0.0, 8.0}

    def test_seed_recorded(self, tmp_path):
        cfg = write_cfg(tmp_path, G2D_CFG)
        out = tmp_path / "out"
        assert main(["g2-dynamics", "--config", cfg, "--out", str(out),
                     "--seed", "5"]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 5


class TestSweep:
    def test_grid_fanout(self, tmp_path):
        cfg = write_cfg(tmp_path, G2D_CFG)
        grid = write_cfg(tmp_path, {"params.modulation.A": [0.01, 0.02]},
                         name="grid.json")
        out = tmp_path / "sweep"
        assert main(["sweep", "--config", cfg, "--grid", grid,
                     "--out", str(out), "--jobs", "1"]) == 0
        meta = json.loads((out / "sweep.json").read_text())
        assert len(meta["runs"]) == 2
        vals = []
        for sub in sorted(os.listdir(out)):
            if not sub.startswith("run-"):
                continue
            man = json.loads((out / sub / "manifest.json").read_text())
            vals.append(man["params"]["modulation"]["A"])
        assert vals == [0.01, 0.02]

    def test_bad_path_rejected(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, G2D_CFG)
        grid = write_cfg(tmp_path, {"params.nope": [1]}, name="grid.json")
        assert main(["sweep", "--config", cfg, "--grid", grid,
                     "--out", str(tmp_path / "s")]) == 2


class TestPresets:
    def test_get_returns_copy(self):
        a = presets.get("figS6")
        a["params"]["dt"] = 99.0
        assert presets.get("figS6")["params"]["dt"] == 0.1

    def test_every_preset_names_a_known_kind(self):
        from wqed.cli import KINDS
        for name in presets.names():
            assert presets.get(name)["kind"] in KINDS
