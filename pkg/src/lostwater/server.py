"""HTTP face of the workbench: projects, GCP editing, fits, pipeline runs.

Storage is one directory per project under a data root (env var
LOSTWATER_DATA_DIR unless given explicitly). Every mutation persists the
project atomically before the response goes out, and carries an optional
`revision` field for optimistic concurrency: a stale revision gets 409 and
the client re-fetches. Reads are lock-free; mutations serialize per project.

Error bodies are always {"error": <name>, "detail": <message>} so the UI can
branch on the name: 400 validation, 404 unknown resource, 409 conflicts,
422 fit failures.
"""

from __future__ import annotations

import math
import os
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, File, Form, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse, Response

from . import __version__
from .changes import ManualAnnotation
from .errors import LostWaterError
from .pipeline import DEFAULT_OVERLAY_ALPHA, run_pipeline
from .project import (
    ImageRef,
    Project,
    ROLES,
    load_role_raster,
    project_open,
    project_save,
)
from .raster import WarpSpec, composite, encode_png, read_world_file, warp
from .transforms import (
    ControlPointPair,
    TRANSFORM_KINDS,
    leave_one_out,
    residual_report,
    fit_transform_record,
    _min_gcps,
)

_STATUS_BY_ERROR = {
    "InsufficientPoints": 422,
    "DegenerateConfiguration": 422,
    "NonInvertible": 422,
    "AtInfinity": 422,
    "EmptyOutput": 400,
    "DimensionMismatch": 400,
    "LatitudeOutOfRange": 400,
    "IoError": 400,
    "MalformedWorldFile": 400,
    "SchemaError": 400,
    "UnsupportedSchema": 400,
    "MissingImage": 400,
}

_ARTIFACT_ROUTES = {
    "change.png": "image/png",
    "change.geojson": "application/geo+json",
    "report.json": "application/json",
    "report.html": "text/html",
}


class ApiError(Exception):
    def __init__(self, status: int, name: str, detail: str):
        super().__init__(detail)
        self.status = status
        self.name = name
        self.detail = detail


def _not_found(detail: str) -> ApiError:
    return ApiError(404, "NotFound", detail)


def _bad_request(detail: str) -> ApiError:
    return ApiError(400, "ValidationError", detail)


def default_data_dir() -> Path:
    return Path(os.environ.get("LOSTWATER_DATA_DIR", "lostwater-data"))


def create_app(data_dir: str | Path | None = None) -> FastAPI:
    root = Path(data_dir) if data_dir is not None else default_data_dir()
    app = FastAPI(title="lostwater workbench", version=__version__)
    # the browser workbench is typically served from a separate static-file
    # origin during development; the API is single-user and unauthenticated
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.data_dir = root

    registry_lock = threading.Lock()
    project_locks: dict = {}
    pipelines_running: set = set()
    app.state.pipelines_running = pipelines_running  # tests poke this

    def lock_for(pid: str) -> threading.Lock:
        with registry_lock:
            return project_locks.setdefault(pid, threading.Lock())

    @app.exception_handler(ApiError)
    def _api_error(request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": exc.name, "detail": exc.detail},
        )

    @app.exception_handler(LostWaterError)
    def _domain_error(request, exc: LostWaterError):
        return JSONResponse(
            status_code=_STATUS_BY_ERROR.get(exc.name, 400),
            content={"error": exc.name, "detail": str(exc)},
        )

    @app.exception_handler(RequestValidationError)
    def _request_error(request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": "ValidationError", "detail": str(exc.errors())},
        )

    def project_dir(pid: str) -> Path:
        if not pid.isalnum():
            raise _not_found(f"no such project: {pid!r}")
        return root / pid

    def project_file(pid: str) -> Path:
        # explicit file path: the directory may not exist yet, and
        # project_path() only maps directories that do.
        return project_dir(pid) / "project.json"

    def load(pid: str) -> Project:
        path = project_file(pid)
        if not path.exists():
            raise _not_found(f"no such project: {pid!r}")
        return project_open(path, check_images=False)

    def check_revision(project: Project, body: dict | None, revision=None) -> None:
        """409 when the caller's base revision is stale; absent means skip."""
        if body is not None:
            revision = body.get("revision", revision)
        if revision is not None and int(revision) != project.revision:
            raise ApiError(
                409,
                "RevisionConflict",
                f"project is at revision {project.revision}, "
                f"request was based on {revision}",
            )

    def bump_and_save(project: Project, pid: str) -> None:
        project.revision += 1
        project_save(project, project_file(pid))

    def envelope(pid: str, project: Project) -> dict:
        return {"id": pid, "project": project.to_dict()}

    # -- projects ----------------------------------------------------------

    @app.post("/projects", status_code=201)
    def create_project(body: dict):
        name = body.get("name")
        if not name or not isinstance(name, str):
            raise _bad_request("body must carry a non-empty string 'name'")
        pid = uuid.uuid4().hex[:12]
        project = Project(name=name)
        root.mkdir(parents=True, exist_ok=True)
        project_save(project, project_file(pid))
        return envelope(pid, project)

    @app.get("/projects/{pid}")
    def get_project(pid: str):
        return envelope(pid, load(pid))

    # -- images ------------------------------------------------------------

    @app.post("/projects/{pid}/images/{role}")
    def upload_image(
        pid: str,
        role: str,
        image: UploadFile = File(...),
        world: UploadFile | None = File(None),
        style: str | None = Form(None),
        revision: int | None = Form(None),
    ):
        if role not in ROLES:
            raise _bad_request(f"role must be one of {ROLES}, got {role!r}")
        with lock_for(pid):
            project = load(pid)
            check_revision(project, None, revision)
            d = project_dir(pid)
            image_path = d / f"{role}.png"
            image_path.write_bytes(image.file.read())
            georef = None
            if world is not None:
                world_path = d / f"{role}.pgw"
                world_path.write_bytes(world.file.read())
                georef = read_world_file(world_path)
            if style is None:
                style = "historical-wash" if role == "historical" else "modern-basemap"
            project.images[role] = ImageRef(
                path=image_path.name, style=style, georef=georef
            )
            # decode now so a bad upload fails the request, not the pipeline
            load_role_raster(project, role, d)
            bump_and_save(project, pid)
            return envelope(pid, project)

    @app.get("/projects/{pid}/images/{role}")
    def get_image(pid: str, role: str):
        if role not in ROLES:
            raise _bad_request(f"role must be one of {ROLES}, got {role!r}")
        project = load(pid)
        ref = project.images.get(role)
        if ref is None:
            raise _not_found(f"project has no {role} image yet")
        return FileResponse(project_dir(pid) / ref.path, media_type="image/png")

    # -- GCPs ----------------------------------------------------------------

    @app.get("/projects/{pid}/gcps")
    def get_gcps(pid: str):
        project = load(pid)
        return {
            "gcps": [g.to_dict() for g in project.gcps],
            "revision": project.revision,
        }

    @app.put("/projects/{pid}/gcps")
    def replace_gcps(pid: str, body: dict):
        rows = body.get("gcps")
        if not isinstance(rows, list):
            raise _bad_request("body must carry a list 'gcps'")
        try:
            gcps = [ControlPointPair.from_dict(r) for r in rows]
        except (KeyError, TypeError, ValueError) as exc:
            raise _bad_request(f"bad GCP: {exc}") from exc
        if len({g.id for g in gcps}) != len(gcps):
            raise _bad_request("duplicate GCP ids")
        with lock_for(pid):
            project = load(pid)
            check_revision(project, body)
            project.gcps = gcps
            bump_and_save(project, pid)
            return envelope(pid, project)

    @app.put("/projects/{pid}/gcps/{gcp_id}")
    def put_gcp(pid: str, gcp_id: str, body: dict):
        row = {k: v for k, v in body.items() if k != "revision"}
        if row.get("id", gcp_id) != gcp_id:
            raise _bad_request(
                f"body id {row['id']!r} contradicts path id {gcp_id!r}"
            )
        row["id"] = gcp_id
        try:
            gcp = ControlPointPair.from_dict(row)
        except (KeyError, TypeError, ValueError) as exc:
            raise _bad_request(f"bad GCP: {exc}") from exc
        with lock_for(pid):
            project = load(pid)
            check_revision(project, body)
            project.upsert_gcp(gcp)
            bump_and_save(project, pid)
            return envelope(pid, project)

    @app.delete("/projects/{pid}/gcps")
    def clear_gcps(pid: str, revision: int | None = None):
        with lock_for(pid):
            project = load(pid)
            check_revision(project, None, revision)
            project.gcps = []
            bump_and_save(project, pid)
            return envelope(pid, project)

    @app.delete("/projects/{pid}/gcps/{gcp_id}")
    def delete_gcp(pid: str, gcp_id: str, revision: int | None = None):
        with lock_for(pid):
            project = load(pid)
            check_revision(project, None, revision)
            if not project.remove_gcp(gcp_id):
                raise _not_found(f"no such GCP: {gcp_id!r}")
            bump_and_save(project, pid)
            return envelope(pid, project)

    # -- fitting -------------------------------------------------------------

    @app.post("/projects/{pid}/fit")
    def fit(pid: str, kind: str = "projective", revision: int | None = None):
        if kind not in TRANSFORM_KINDS:
            raise _bad_request(
                f"kind must be one of {TRANSFORM_KINDS}, got {kind!r}"
            )
        with lock_for(pid):
            project = load(pid)
            check_revision(project, None, revision)
            record = fit_transform_record(project.gcps, kind)
            project.transform = record
            bump_and_save(project, pid)
            return {
                "transform": record.to_dict(),
                "revision": project.revision,
            }

    @app.get("/projects/{pid}/residuals")
    def residuals(pid: str):
        project = load(pid)
        record = project.transform
        if record is None:
            raise _not_found("no fitted transform yet; POST /fit first")
        table = residual_report(record.forward, project.gcps, include_disabled=True)
        enabled = {g.id: g.enabled for g in project.gcps}
        loo = {}
        enabled_count = sum(1 for g in project.gcps if g.enabled)
        if enabled_count >= _min_gcps(record.kind) + 1:
            loo = {e.gcp_id: e for e in leave_one_out(project.gcps, record.kind)}
        entries = []
        for gcp_id, residual in table.entries:
            row = {
                "id": gcp_id,
                "residual_px": residual,
                "enabled": enabled.get(gcp_id, True),
                "outlier": gcp_id in record.outlier_ids,
            }
            if gcp_id in loo:
                e = loo[gcp_id]
                row["loo_residual_px"] = (
                    None if math.isnan(e.loo_residual) else e.loo_residual
                )
            entries.append(row)
        return {
            "kind": record.kind,
            "rmse_forward": table.rmse,
            "entries": entries,
            "outlier_ids": list(record.outlier_ids),
            "revision": project.revision,
        }

    # -- overlay (computed on the fly for the alpha slider) -------------------

    @app.get("/projects/{pid}/overlay.png")
    def overlay(pid: str, alpha: float = DEFAULT_OVERLAY_ALPHA):
        if not 0.0 <= alpha <= 1.0:
            raise _bad_request(f"alpha must be within [0, 1], got {alpha}")
        project = load(pid)
        if project.transform is None:
            raise _not_found("no fitted transform yet; POST /fit first")
        d = project_dir(pid)
        historical = load_role_raster(project, "historical", d)
        modern = load_role_raster(project, "modern", d)
        rectified = warp(
            historical,
            WarpSpec(
                backward=project.transform.backward,
                out_width=modern.width,
                out_height=modern.height,
                out_georef=modern.georef,
            ),
        )
        blended = composite(modern, rectified, alpha)
        return Response(content=encode_png(blended), media_type="image/png")

    # -- pipeline and artifacts ----------------------------------------------

    @app.post("/projects/{pid}/pipeline")
    def pipeline(pid: str, body: dict | None = None):
        body = body or {}
        kind = body.get("kind", "projective")
        if kind not in TRANSFORM_KINDS:
            raise _bad_request(
                f"kind must be one of {TRANSFORM_KINDS}, got {kind!r}"
            )
        alpha = float(body.get("overlay_alpha", DEFAULT_OVERLAY_ALPHA))
        if not 0.0 <= alpha <= 1.0:
            raise _bad_request(f"overlay_alpha must be within [0, 1], got {alpha}")
        with lock_for(pid):
            project = load(pid)  # 404 before the running-check for unknown ids
            check_revision(project, body)
            with registry_lock:
                if pid in pipelines_running:
                    raise ApiError(
                        409,
                        "PipelineRunning",
                        "a pipeline run for this project is already in progress",
                    )
                pipelines_running.add(pid)
        try:
            result = run_pipeline(project_dir(pid), kind=kind, overlay_alpha=alpha)
        finally:
            with registry_lock:
                pipelines_running.discard(pid)
        return {
            "report": result.report.to_dict(),
            "revision": result.project.revision,
        }

    def artifact_route(filename: str, media_type: str):
        def handler(pid: str):
            load(pid)  # 404 for unknown project first
            path = project_dir(pid) / "artifacts" / filename
            if not path.exists():
                raise _not_found(
                    f"artifact {filename} not generated yet; POST /pipeline first"
                )
            return FileResponse(path, media_type=media_type)

        handler.__name__ = f"artifact_{filename.replace('.', '_')}"
        return handler

    for filename, media_type in _ARTIFACT_ROUTES.items():
        app.get(f"/projects/{{pid}}/{filename}")(
            artifact_route(filename, media_type)
        )

    # -- annotations -----------------------------------------------------------

    @app.post("/projects/{pid}/annotations", status_code=201)
    def add_annotation(pid: str, body: dict):
        row = {k: v for k, v in body.items() if k != "revision"}
        try:
            annotation = ManualAnnotation.from_dict(row)
        except (KeyError, TypeError, ValueError) as exc:
            raise _bad_request(f"bad annotation: {exc}") from exc
        with lock_for(pid):
            project = load(pid)
            check_revision(project, body)
            project.annotations.append(annotation)
            bump_and_save(project, pid)
            return envelope(pid, project)

    return app


def serve(port: int = 8000, host: str = "127.0.0.1", data_dir=None) -> None:
    """Blocking development server."""
    import uvicorn

    uvicorn.run(create_app(data_dir), host=host, port=port)
