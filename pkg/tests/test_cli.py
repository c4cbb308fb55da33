"""End-to-end CLI runs on tiny grids, plus figure rendering."""

import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from boxpath import cli

TINY = {
    "box": [1.0, 1.0, 1.0],
    "seed": 99,
    "samples": 60_000,
    "grid_nodes_3d": 16,
    "grid_nodes_2d": 33,
    "grid_nodes_1d": 129,
    "angle_nodes": 128,
    "slope_nodes": 256,
    "s_nodes_joint": 96,
    "s_nodes_conditional": 256,
    "bins_joint": [6, 6, 6],
    "bins_length": 48,
}


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "tiny.json"
    cfg.write_text(json.dumps(TINY))
    assert cli.main(["analytic", "--config", str(cfg), "--out", str(root / "analytic"), "--csv"]) == 0
    assert cli.main(["sample", "--config", str(cfg), "--out", str(root / "sample"), "--spill"]) == 0
    return root


def test_presets(tmp_path):
    assert cli.main(["presets", "--out", str(tmp_path)]) == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert names == {"cube.json", "slab.json", "rod.json"}
    cfg = json.loads((tmp_path / "slab.json").read_text())
    assert cfg["box"] == [1.0, 0.1, 1.0]
    assert cli.main(["analytic", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 4


def test_analytic_outputs(workdir):
    out = workdir / "analytic"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "analytic"
    assert len(manifest["config_hash"]) == 64
    assert manifest["combination_modes"] == {"rays": "subdensity", "chords": "subdensity"}
    assert manifest["adjacent_jacobian_forms_max_gap"] <= 1e-12
    listed = set(manifest["outputs"])
    present = {p.name for p in out.iterdir()} - {"manifest.json"}
    assert listed == present
    assert "rays_joint_opposing-entry2.npz" in listed
    assert "combined_chords.csv" in listed


def test_sample_outputs(workdir):
    out = workdir / "sample"
    manifest = json.loads((out / "manifest.json").read_text())
    stats = manifest["stats"]
    assert stats["rays"]["meta"]["model"] == "cube-components"
    assert sum(stats["rays"]["entry_face_counts"]) == TINY["samples"]
    assert (out / "rays.bin").exists() and (out / "chords.bin").exists()
    assert 0.1 < stats["chords"]["meta"]["collision_rate"] < 0.25


def test_sample_rerun_byte_identical(workdir, tmp_path):
    cfg = workdir / "tiny.json"
    assert cli.main(["sample", "--config", str(cfg), "--out", str(tmp_path / "s2"), "--spill"]) == 0
    for name in ("sample_lengths.npz", "rays.bin", "manifest.json"):
        assert (tmp_path / "s2" / name).read_bytes() == (workdir / "sample" / name).read_bytes()


def test_compare_command(workdir, tmp_path):
    report_path = tmp_path / "report.json"
    code = cli.main(
        ["compare", "--analytic", str(workdir / "analytic"), "--sample", str(workdir / "sample"), "--out", str(report_path)]
    )
    assert code == 0
    report = json.loads(report_path.read_text())
    assert set(report) == {"joint", "length", "summary"}
    assert len(report["joint"]) == 18  # 9 classes x 2 models
    assert report["summary"]["worst_l1"] < 0.5
    assert report["length"]["combined_chords"]["l1"] < 0.1


def test_figures_command(workdir):
    out = workdir / "figures"
    code = cli.main(
        ["figures", "--analytic", str(workdir / "analytic"), "--sample", str(workdir / "sample"), "--out", str(out), "--cell", "0.5", "0.5", "0.1"]
    )
    assert code == 0
    manifest = json.loads((out / "figures_manifest.json").read_text())
    assert "band_map_opposing-entry2.svg" in manifest["outputs"]
    assert "length_overlay_axis2.csv" in manifest["outputs"]
    for name in manifest["outputs"]:
        assert (out / name).stat().st_size > 0
        if name.endswith(".svg"):
            root = ET.parse(out / name).getroot()
            assert root.tag.endswith("svg")


def test_figures_subset(workdir, tmp_path):
    out = tmp_path / "figs"
    assert cli.main(["figures", "--analytic", str(workdir / "analytic"), "--out", str(out), "--which", "band"]) == 0
    names = json.loads((out / "figures_manifest.json").read_text())["outputs"]
    assert all(n.startswith("band_map") for n in names)
    assert cli.main(["figures", "--analytic", str(workdir / "analytic"), "--out", str(out), "--which", "nope"]) == 2


def test_usage_errors(tmp_path):
    assert cli.main(["analytic", "--box", "1", "0", "1", "--out", str(tmp_path)]) == 2
    assert cli.main(["sample", "--samples", "-3", "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"grid_nodes_3d": "huge"}')
    assert cli.main(["analytic", "--config", str(bad), "--out", str(tmp_path)]) == 2
    unknown = tmp_path / "unknown.json"
    unknown.write_text('{"grid_nodes_9d": 4}')
    assert cli.main(["analytic", "--config", str(unknown), "--out", str(tmp_path)]) == 2


def test_missing_artifacts_exit_code(tmp_path):
    assert cli.main(["compare", "--analytic", str(tmp_path / "a"), "--sample", str(tmp_path / "b"), "--out", str(tmp_path / "r.json")]) == 4
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert cli.main(["analytic", "--config", str(broken), "--out", str(tmp_path)]) == 4


def test_numerical_failure_exit_code(workdir):
    # a cell far outside every face has no analytic mass
    code = cli.main(
        ["figures", "--analytic", str(workdir / "analytic"), "--out", str(workdir / "f2"), "--which", "location", "--cell", "40.0", "40.0", "0.001"]
    )
    assert code == 3


def test_workers_env_override(cube, monkeypatch):
    monkeypatch.setenv("BOXPATH_WORKERS", "3")
    assert cli.RunConfig().resolved_workers() == 3
    monkeypatch.setenv("BOXPATH_WORKERS", "zebra")
    with pytest.raises(ValueError):
        cli.RunConfig().resolved_workers()
    monkeypatch.delenv("BOXPATH_WORKERS")
    assert cli.RunConfig().resolved_workers() == 1
    assert cli.RunConfig(workers=2).resolved_workers() == 2
