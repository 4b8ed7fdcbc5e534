"""Command line mirror of the workbench operations.

Every command is a thin wrapper: load the project file, call the same
functions the HTTP API calls, print a short summary. Exit code 0 on success,
1 on domain failures (fit errors, missing images, pipeline stage failures),
2 on usage errors (click's default).
"""

from __future__ import annotations

from contextlib import contextmanager
from pathlib import Path

import click
import numpy as np

from .changes import ChangeClass, diff_masks
from .errors import LostWaterError
from .pipeline import DEFAULT_OVERLAY_ALPHA, run_pipeline
from .project import (
    load_role_raster,
    project_open,
    project_path,
    project_save,
    water_config_for,
)
from .raster import Raster, WarpSpec, composite, save_png, warp as warp_raster
from .server import default_data_dir, serve as serve_app
from .transforms import TRANSFORM_KINDS, fit_transform_record
from .water import extract_water, warp_mask

ROLE_CHOICE = click.Choice(["historical", "modern"])
KIND_CHOICE = click.Choice(list(TRANSFORM_KINDS))

project_option = click.option(
    "--project",
    "project_file",
    required=True,
    type=click.Path(exists=True, path_type=Path),
    help="Project JSON file or its directory.",
)


@contextmanager
def _domain_errors():
    """Convert domain failures into exit-code-1 CLI errors."""
    try:
        yield
    except LostWaterError as exc:
        raise click.ClickException(str(exc)) from exc


def _require_transform(project):
    if project.transform is None:
        raise click.ClickException("project has no fitted transform; run fit first")
    return project.transform


def _artifact_target(project_file: Path, out: Path | None, default_name: str) -> Path:
    if out is not None:
        return out
    target = project_path(project_file).parent / "artifacts" / default_name
    target.parent.mkdir(exist_ok=True)
    return target


@click.group()
@click.version_option(package_name="lostwater")
def main():
    """Georectify historical maps and chart their lost waterways."""


@main.command()
@project_option
@click.option("--kind", type=KIND_CHOICE, default="projective", show_default=True)
def fit(project_file: Path, kind: str):
    """Fit the GCP transform and store it in the project."""
    with _domain_errors():
        project = project_open(project_file, check_images=False)
        record = fit_transform_record(project.gcps, kind)
        project.transform = record
        project.revision += 1
        project_save(project, project_file)
    click.echo(f"RMSE {record.rmse_forward:.3f}")
    for gcp_id, residual in record.per_point_residuals:
        click.echo(f"  {gcp_id}  {residual:.3f} px")
    if record.outlier_ids:
        click.echo(f"outliers: {', '.join(record.outlier_ids)}")


@main.command()
@project_option
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Output PNG [default: <project>/artifacts/rectified.png]")
def warp(project_file: Path, out: Path | None):
    """Warp the historical map into the modern frame."""
    with _domain_errors():
        project = project_open(project_file, check_images=False)
        record = _require_transform(project)
        base = project_path(project_file).parent
        historical = load_role_raster(project, "historical", base)
        modern = load_role_raster(project, "modern", base)
        rectified = warp_raster(
            historical,
            WarpSpec(
                backward=record.backward,
                out_width=modern.width,
                out_height=modern.height,
                out_georef=modern.georef,
            ),
        )
        target = _artifact_target(project_file, out, "rectified.png")
        save_png(rectified, target)
    click.echo(f"wrote {target}")


@main.command()
@project_option
@click.option("--alpha", type=click.FloatRange(0.0, 1.0),
              default=DEFAULT_OVERLAY_ALPHA, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Output PNG [default: <project>/artifacts/overlay.png]")
def overlay(project_file: Path, alpha: float, out: Path | None):
    """Blend the rectified historical map over the modern basemap."""
    with _domain_errors():
        project = project_open(project_file, check_images=False)
        record = _require_transform(project)
        base = project_path(project_file).parent
        historical = load_role_raster(project, "historical", base)
        modern = load_role_raster(project, "modern", base)
        rectified = warp_raster(
            historical,
            WarpSpec(
                backward=record.backward,
                out_width=modern.width,
                out_height=modern.height,
                out_georef=modern.georef,
            ),
        )
        blended = composite(modern, rectified, alpha)
        target = _artifact_target(project_file, out, "overlay.png")
        save_png(blended, target)
    click.echo(f"wrote {target}")


@main.command()
@project_option
@click.option("--role", type=ROLE_CHOICE, required=True)
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Output PNG [default: <project>/artifacts/water_<role>.png]")
def water(project_file: Path, role: str, out: Path | None):
    """Extract a water mask (white on transparent) for one image."""
    with _domain_errors():
        project = project_open(project_file, check_images=False)
        base = project_path(project_file).parent
        raster = load_role_raster(project, role, base)
        mask = extract_water(raster, water_config_for(project, role))
        pixels = np.zeros((mask.height, mask.width, 4), dtype=np.uint8)
        pixels[mask.bits] = (255, 255, 255, 255)
        target = _artifact_target(project_file, out, f"water_{role}.png")
        save_png(Raster(pixels=pixels, georef=mask.georef), target)
    click.echo(f"{mask.count} water px")
    click.echo(f"wrote {target}")


@main.command()
@project_option
@click.option("--kind", type=KIND_CHOICE, default="projective", show_default=True)
def diff(project_file: Path, kind: str):
    """Classify change without writing artifacts; print per-class counts."""
    with _domain_errors():
        project = project_open(project_file, check_images=False)
        base = project_path(project_file).parent
        historical = load_role_raster(project, "historical", base)
        modern = load_role_raster(project, "modern", base)
        record = project.transform or fit_transform_record(project.gcps, kind)
        historical_mask = extract_water(
            historical, water_config_for(project, "historical")
        )
        modern_mask = extract_water(modern, water_config_for(project, "modern"))
        warped = warp_mask(
            historical_mask,
            record.backward,
            modern.width,
            modern.height,
            out_georef=modern.georef,
        )
        change_map = diff_masks(warped, modern_mask)
    counts = change_map.counts()
    areas = change_map.areas_m2()
    for cls in (ChangeClass.LOST, ChangeClass.PERSISTENT, ChangeClass.NEW,
                ChangeClass.NONE):
        line = f"{cls.name} {counts[cls]}"
        if areas is not None:
            line += f"  ({areas[cls]:.1f} m2)"
        click.echo(line)


@main.command()
@project_option
@click.option("--kind", type=KIND_CHOICE, default="projective", show_default=True)
@click.option("--alpha", type=click.FloatRange(0.0, 1.0),
              default=DEFAULT_OVERLAY_ALPHA, show_default=True,
              help="Overlay blend used for the overlay artifact.")
def report(project_file: Path, kind: str, alpha: float):
    """Run the full pipeline and write every artifact."""
    with _domain_errors():
        result = run_pipeline(project_file, kind=kind, overlay_alpha=alpha)
    counts = result.change_map.counts()
    click.echo(
        "LOST {l}  PERSISTENT {p}  NEW {n}".format(
            l=counts[ChangeClass.LOST],
            p=counts[ChangeClass.PERSISTENT],
            n=counts[ChangeClass.NEW],
        )
    )
    labeled = [p for p in result.report.polygons if "label" in p]
    if labeled:
        click.echo(f"{len(labeled)} region(s) labeled: {labeled[0]['label']}")
    for name, path in sorted(result.artifacts.items()):
        click.echo(f"wrote {path}")


@main.command()
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", type=click.Path(path_type=Path), default=None,
              help="Project root [default: $LOSTWATER_DATA_DIR or ./lostwater-data]")
def serve(port: int, host: str, data_dir: Path | None):
    """Serve the HTTP API for the browser workbench."""
    target = data_dir if data_dir is not None else default_data_dir()
    click.echo(f"serving projects from {target} on http://{host}:{port}")
    serve_app(port=port, host=host, data_dir=target)


if __name__ == "__main__":
    main()
