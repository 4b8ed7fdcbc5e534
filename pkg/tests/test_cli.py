"""CLI smoke tests: exit codes, printed summaries, written files."""

import json

import pytest
from click.testing import CliRunner

from lostwater.cli import main
from lostwater.project import project_open
from lostwater.raster import load_png
from lostwater.synth import build_estuary_fixture, fixture_project
from test_pipeline import _self_comparison_project


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def self_project(tmp_path):
    _self_comparison_project(tmp_path)
    return tmp_path / "project.json"


def invoke(runner, *args):
    return runner.invoke(main, [str(a) for a in args])


def test_fit_exact_gcps_prints_zero_rmse(runner, self_project):
    result = invoke(runner, "fit", "--project", self_project)
    assert result.exit_code == 0, result.output
    assert result.output.startswith("RMSE 0.000\n")
    # one residual row per GCP, no outlier line
    assert result.output.count(" px") == 7
    assert "outliers" not in result.output


def test_fit_stores_transform_and_bumps_revision(runner, self_project):
    before = project_open(self_project, check_images=False).revision
    invoke(runner, "fit", "--project", self_project)
    project = project_open(self_project, check_images=False)
    assert project.transform is not None
    assert project.transform.kind == "projective"
    assert project.revision == before + 1


def test_fit_too_few_gcps_exits_one(runner, tmp_path):
    project = _self_comparison_project(tmp_path)
    project.gcps = project.gcps[:3]
    from lostwater.project import project_save

    project_save(project, tmp_path)
    result = invoke(runner, "fit", "--project", tmp_path / "project.json")
    assert result.exit_code == 1
    assert "Error" in result.output


def test_missing_project_option_exits_two(runner):
    result = invoke(runner, "fit")
    assert result.exit_code == 2


def test_bad_kind_exits_two(runner, self_project):
    result = invoke(runner, "fit", "--project", self_project, "--kind", "cubic")
    assert result.exit_code == 2


def test_warp_requires_prior_fit(runner, self_project):
    result = invoke(runner, "warp", "--project", self_project)
    assert result.exit_code == 1
    assert "no fitted transform" in result.output


def test_warp_writes_modern_sized_raster(runner, self_project, tmp_path):
    invoke(runner, "fit", "--project", self_project)
    out = tmp_path / "rect.png"
    result = invoke(runner, "warp", "--project", self_project, "--out", out)
    assert result.exit_code == 0, result.output
    raster = load_png(out)
    assert (raster.width, raster.height) == (120, 100)


def test_overlay_default_target_under_artifacts(runner, self_project, tmp_path):
    invoke(runner, "fit", "--project", self_project)
    result = invoke(runner, "overlay", "--project", self_project, "--alpha", 0.5)
    assert result.exit_code == 0, result.output
    assert (tmp_path / "artifacts" / "overlay.png").exists()


def test_overlay_alpha_out_of_range_exits_two(runner, self_project):
    result = invoke(runner, "overlay", "--project", self_project, "--alpha", 1.5)
    assert result.exit_code == 2


def test_water_counts_blob_pixels(runner, self_project, tmp_path):
    out = tmp_path / "mask.png"
    result = invoke(
        runner, "water", "--project", self_project, "--role", "historical",
        "--out", out,
    )
    assert result.exit_code == 0, result.output
    count = int(result.output.split()[0])
    # 30x30 blob minus the four convex corners clipped by the opening step
    assert count == 30 * 30 - 4
    mask = load_png(out)
    assert (mask.pixels[..., 3] == 255).sum() == count


def test_diff_self_comparison_reports_no_change(runner, self_project):
    result = invoke(runner, "diff", "--project", self_project)
    assert result.exit_code == 0, result.output
    lines = result.output.splitlines()
    assert lines[0].startswith("LOST 0 ")
    assert lines[2].startswith("NEW 0 ")
    assert "m2" in lines[1]  # georeferenced modern frame -> areas printed


def test_report_on_estuary_emits_lost_polygons(runner, tmp_path):
    fixture = build_estuary_fixture(tmp_path)
    fixture_project(fixture)
    result = invoke(runner, "report", "--project", tmp_path / "project.json")
    assert result.exit_code == 0, result.output
    assert result.output.startswith("LOST ")
    doc = json.loads((tmp_path / "artifacts" / "change.geojson").read_text())
    lost = [
        f for f in doc["features"] if f["properties"].get("class") == "LOST"
    ]
    assert len(lost) >= 1
    for name in ("rectified.png", "overlay.png", "change.png",
                 "report.json", "report.html"):
        assert (tmp_path / "artifacts" / name).exists()


def test_report_propagates_stage_failures(runner, self_project, tmp_path):
    (tmp_path / "mod.png").unlink()
    result = invoke(runner, "report", "--project", self_project)
    assert result.exit_code == 1
    assert "load" in result.output


def test_serve_help_documents_data_dir(runner):
    result = invoke(runner, "serve", "--help")
    assert result.exit_code == 0
    assert "LOSTWATER_DATA_DIR" in result.output


def test_group_help_lists_commands(runner):
    result = invoke(runner, "--help")
    assert result.exit_code == 0
    for command in ("fit", "warp", "overlay", "water", "diff", "report", "serve"):
        assert command in result.output
