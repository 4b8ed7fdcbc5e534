"""End-to-end run: fit, warp, extract, diff, render, vectorize, report.

Everything here is deterministic plumbing over the core modules. Given the
same project bytes, two runs produce byte-identical artifacts — reports carry
no wall-clock timestamps, JSON is dumped with sorted keys, and every raster
path is already deterministic by contract.
"""

from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import jinja2
import numpy as np
from scipy import ndimage

from .changes import (
    ChangeClass,
    ChangeMap,
    ChangeMapStyle,
    DEFAULT_STYLE,
    diff_masks,
    render_changemap,
)
from .errors import LostWaterError, PipelineError
from .project import (
    Project,
    load_role_raster,
    project_open,
    project_path,
    project_save,
    water_config_for,
)
from .raster import WarpSpec, composite, save_png, warp
from .transforms import fit_transform_record, residual_report
from .vectorize import _component_label_at, change_map_to_geojson, trace_class
from .water import EIGHT_CONNECTED, extract_water, warp_mask

RECLAMATION_LABEL = "lost water / possible reclamation"

LEGEND = {
    "LOST": {"color": DEFAULT_STYLE.lost, "meaning": "waterway disappeared"},
    "PERSISTENT": {"color": DEFAULT_STYLE.persistent, "meaning": "still present"},
    "NEW": {"color": DEFAULT_STYLE.new, "meaning": "new waterway"},
    "UNDERGROUND": {
        "color": DEFAULT_STYLE.underground,
        "meaning": "possibly underground (manual annotation)",
    },
}

DEFAULT_OVERLAY_ALPHA = 0.6


@contextmanager
def _stage(name: str):
    """Tag any domain error with the pipeline stage it escaped from."""
    try:
        yield
    except PipelineError:
        raise
    except LostWaterError as exc:
        raise PipelineError(name, exc) from exc


@dataclass
class ChangeReport:
    """Everything a reviewer needs from one pipeline run, JSON-ready."""

    project_name: str
    transform: dict  # kind, rmse_forward, gcp_count, outlier_ids
    residuals: list  # per-GCP rows incl. disabled points and outlier flags
    classes: dict  # class name -> {"pixels": int, "area_m2": float | None}
    polygons: list  # vectorized change regions with optional labels
    annotations: list
    legend: dict = field(default_factory=lambda: dict(LEGEND))
    artifacts: dict = field(default_factory=dict)  # name -> project-relative path

    def to_dict(self) -> dict:
        return {
            "project_name": self.project_name,
            "transform": self.transform,
            "residuals": self.residuals,
            "classes": self.classes,
            "polygons": self.polygons,
            "annotations": self.annotations,
            "legend": {
                name: {"color": list(entry["color"]), "meaning": entry["meaning"]}
                for name, entry in self.legend.items()
            },
            "artifacts": self.artifacts,
        }


@dataclass
class PipelineResult:
    project: Project
    change_map: ChangeMap
    report: ChangeReport
    artifacts: dict  # name -> absolute Path


def coastal_lost_components(lost_mask: np.ndarray, modern_water: np.ndarray) -> set:
    """Component ids of LOST regions that hug border-touching modern water.

    "Coastal" here means 8-adjacent to a modern water body that reaches the
    frame border — the open-sea/estuary situation where vanished water next
    to the present shoreline is plausibly reclaimed land rather than a lost
    inland channel.
    """
    water_labels, n_water = ndimage.label(modern_water, structure=EIGHT_CONNECTED)
    if n_water == 0 or not lost_mask.any():
        return set()
    edge_ids = np.unique(
        np.concatenate(
            [
                water_labels[0, :],
                water_labels[-1, :],
                water_labels[:, 0],
                water_labels[:, -1],
            ]
        )
    )
    edge_ids = edge_ids[edge_ids > 0]
    if edge_ids.size == 0:
        return set()
    sea = np.isin(water_labels, edge_ids)
    shore = ndimage.binary_dilation(sea, structure=EIGHT_CONNECTED)
    lost_labels, n_lost = ndimage.label(lost_mask, structure=EIGHT_CONNECTED)
    touched = np.unique(lost_labels[shore & (lost_labels > 0)])
    return {int(i) for i in touched}


def _polygon_rows(change_map: ChangeMap, modern_water: np.ndarray) -> list:
    """Per-polygon report rows, labeling coastal LOST regions."""
    area_grid = change_map.pixel_ground_area_m2()
    rows = []
    for cls in (ChangeClass.LOST, ChangeClass.PERSISTENT, ChangeClass.NEW):
        mask = change_map.class_mask(cls)
        if not mask.any():
            continue
        labels, _n = ndimage.label(mask, structure=EIGHT_CONNECTED)
        coastal = (
            coastal_lost_components(mask, modern_water)
            if cls is ChangeClass.LOST
            else set()
        )
        for poly in trace_class(change_map, cls):
            x0, y0 = poly.outer[0]
            component = _component_label_at(labels, x0, y0)
            row = {"class": cls.name, "area_px": poly.area_px}
            if area_grid is not None:
                row["area_m2"] = float(area_grid[labels == component].sum())
            if component in coastal:
                row["label"] = RECLAMATION_LABEL
            rows.append(row)
    rows.sort(key=lambda r: (r["class"], -r["area_px"]))
    return rows


_HTML_TEMPLATE = jinja2.Template(
    """<!doctype html>
<html>
<head>
<meta charset="utf-8">
<title>{{ r.project_name }} — waterway change report</title>
<style>
body { font-family: sans-serif; margin: 2em; max-width: 60em; }
table { border-collapse: collapse; margin: 1em 0; }
td, th { border: 1px solid #999; padding: 0.3em 0.8em; text-align: left; }
.swatch { display: inline-block; width: 1em; height: 1em; vertical-align: middle; }
</style>
</head>
<body>
<h1>{{ r.project_name }}</h1>

<h2>Transform</h2>
<p>kind {{ r.transform.kind }}, {{ r.transform.gcp_count }} GCPs,
forward RMSE {{ "%.6f"|format(r.transform.rmse_forward) }} px</p>
<table>
<tr><th>GCP</th><th>residual (px)</th><th>enabled</th><th>outlier</th></tr>
{% for row in r.residuals %}
<tr><td>{{ row.id }}</td><td>{{ "%.6f"|format(row.residual_px) }}</td>
<td>{{ "yes" if row.enabled else "no" }}</td>
<td>{{ "yes" if row.outlier else "" }}</td></tr>
{% endfor %}
</table>

<h2>Change classes</h2>
<table>
<tr><th></th><th>class</th><th>pixels</th><th>area (m²)</th><th>meaning</th></tr>
{% for name, stats in r.classes.items() %}
<tr>
<td>{% if name in r.legend %}<span class="swatch" style="background: rgb({{ r.legend[name].color[0] }},{{ r.legend[name].color[1] }},{{ r.legend[name].color[2] }})"></span>{% endif %}</td>
<td>{{ name }}</td><td>{{ stats.pixels }}</td>
<td>{{ "%.1f"|format(stats.area_m2) if stats.area_m2 is not none else "—" }}</td>
<td>{{ r.legend[name].meaning if name in r.legend else "" }}</td>
</tr>
{% endfor %}
</table>

<h2>Change regions</h2>
<table>
<tr><th>class</th><th>area (px)</th><th>area (m²)</th><th>label</th></tr>
{% for p in r.polygons %}
<tr><td>{{ p["class"] }}</td><td>{{ p.area_px }}</td>
<td>{{ "%.1f"|format(p.area_m2) if "area_m2" in p else "—" }}</td>
<td>{{ p.label if "label" in p else "" }}</td></tr>
{% endfor %}
</table>

{% if r.annotations %}
<h2>Manual annotations</h2>
<table>
<tr><th>status</th><th>vertices</th><th>note</th></tr>
{% for a in r.annotations %}
<tr><td>{{ a.status }}</td><td>{{ a.vertices|length }}</td><td>{{ a.note }}</td></tr>
{% endfor %}
</table>
{% endif %}

<h2>Artifacts</h2>
<ul>
{% for name, path in r.artifacts.items() %}
<li>{{ name }}: <a href="{{ path }}">{{ path }}</a></li>
{% endfor %}
</ul>
</body>
</html>
"""
)


def _render_html(report: ChangeReport) -> str:
    # Jinja attribute access falls back to item lookup, so the plain dict
    # tree from to_dict() renders directly.
    return _HTML_TEMPLATE.render(r=report.to_dict())


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def run_pipeline(
    project_file: str | Path,
    kind: str = "projective",
    overlay_alpha: float = DEFAULT_OVERLAY_ALPHA,
    style: ChangeMapStyle = DEFAULT_STYLE,
    save_project: bool = True,
) -> PipelineResult:
    """Run the whole comparison on a saved project and write its artifacts.

    Artifacts land in <project dir>/artifacts/. The fitted transform is
    stored back into the project (one fitted record per project; refit
    replaces) unless save_project is disabled.
    """
    target = project_path(project_file)
    base_dir = target.parent

    with _stage("load"):
        # load_role_raster re-checks existence, so skip project_open's own
        # image pass rather than decode every PNG twice.
        project = project_open(target, check_images=False)
        historical = load_role_raster(project, "historical", base_dir)
        modern = load_role_raster(project, "modern", base_dir)

    with _stage("fit"):
        record = fit_transform_record(project.gcps, kind)
        project.transform = record

    with _stage("warp"):
        spec = WarpSpec(
            backward=record.backward,
            out_width=modern.width,
            out_height=modern.height,
            out_georef=modern.georef,
        )
        rectified = warp(historical, spec)
        overlay = composite(modern, rectified, overlay_alpha)

    with _stage("extract"):
        historical_mask = extract_water(
            historical, water_config_for(project, "historical")
        )
        modern_mask = extract_water(modern, water_config_for(project, "modern"))
        warped_mask = warp_mask(
            historical_mask,
            record.backward,
            modern.width,
            modern.height,
            out_georef=modern.georef,
        )

    with _stage("diff"):
        change_map = diff_masks(
            warped_mask,
            modern_mask,
            provenance={
                "historical_image": project.images["historical"].path,
                "modern_image": project.images["modern"].path,
                "transform_kind": record.kind,
                "rmse_forward": record.rmse_forward,
            },
            annotations=tuple(project.annotations),
        )

    with _stage("render"):
        change_png = render_changemap(change_map, style)

    with _stage("vectorize"):
        collection = change_map_to_geojson(change_map)
        polygon_rows = _polygon_rows(change_map, modern_mask.bits)

    with _stage("report"):
        counts = change_map.counts()
        areas = change_map.areas_m2()
        table = residual_report(record.forward, project.gcps, include_disabled=True)
        enabled = {g.id: g.enabled for g in project.gcps}
        report = ChangeReport(
            project_name=project.name,
            transform={
                "kind": record.kind,
                "rmse_forward": record.rmse_forward,
                "gcp_count": record.gcp_count,
                "outlier_ids": list(record.outlier_ids),
            },
            residuals=[
                {
                    "id": gcp_id,
                    "residual_px": res,
                    "enabled": enabled[gcp_id],
                    "outlier": gcp_id in record.outlier_ids,
                }
                for gcp_id, res in table.entries
            ],
            classes={
                cls.name: {
                    "pixels": counts[cls],
                    "area_m2": None if areas is None else areas[cls],
                }
                for cls in ChangeClass
            },
            polygons=polygon_rows,
            annotations=[a.to_dict() for a in project.annotations],
        )

        artifacts_dir = base_dir / "artifacts"
        artifacts_dir.mkdir(exist_ok=True)
        paths = {
            "rectified": artifacts_dir / "rectified.png",
            "overlay": artifacts_dir / "overlay.png",
            "change": artifacts_dir / "change.png",
            "geojson": artifacts_dir / "change.geojson",
            "report_json": artifacts_dir / "report.json",
            "report_html": artifacts_dir / "report.html",
        }
        report.artifacts = {
            name: str(p.relative_to(base_dir)) for name, p in paths.items()
        }
        save_png(rectified, paths["rectified"])
        save_png(overlay, paths["overlay"])
        save_png(change_png, paths["change"])
        _write_json(paths["geojson"], collection)
        _write_json(paths["report_json"], report.to_dict())
        paths["report_html"].write_text(_render_html(report))
        if save_project:
            project.revision += 1
            project_save(project, target)

    return PipelineResult(
        project=project,
        change_map=change_map,
        report=report,
        artifacts=paths,
    )
