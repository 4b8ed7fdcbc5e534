"""Project persistence: one versioned JSON document per georectification job.

The document holds everything the interactive loop accumulates: image
references (by path relative to the project file, so a project directory
zips into a portable bundle), the GCP set, the fitted transform record,
per-image water color configs, and manual annotations. Saves go through a
temp-file-then-rename protocol so a crash mid-write can never leave a
half-written project behind.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import IoError, MissingImage, SchemaError, UnsupportedSchema
from .raster import GeoReference, Raster, load_png
from .transforms import ControlPointPair, TransformRecord
from .changes import ManualAnnotation
from .water import STYLE_PRESETS, WaterColorConfig

SCHEMA_VERSION = 1

ROLES = ("historical", "modern")


def _utcnow() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


def _check_keys(d: dict, allowed: set, where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise UnsupportedSchema(
            f"{where}: unknown field(s) {sorted(unknown)} — "
            "document written by a newer version?"
        )


@dataclass(frozen=True)
class ImageRef:
    """One map image by project-relative path, with its declared color style."""

    path: str
    style: str = "modern-basemap"
    georef: GeoReference | None = None

    def __post_init__(self):
        if Path(self.path).is_absolute():
            raise ValueError(f"image path must be relative, got {self.path!r}")

    def to_dict(self) -> dict:
        d: dict = {"path": self.path, "style": self.style}
        if self.georef is not None:
            d["georef"] = self.georef.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ImageRef":
        _check_keys(d, {"path", "style", "georef"}, "image")
        return cls(
            path=str(d["path"]),
            style=str(d.get("style", "modern-basemap")),
            georef=GeoReference.from_dict(d["georef"]) if d.get("georef") else None,
        )


def default_water_configs() -> dict:
    return {
        "historical": STYLE_PRESETS["historical-wash"],
        "modern": STYLE_PRESETS["modern-basemap"],
    }


@dataclass
class Project:
    name: str
    schema_version: int = SCHEMA_VERSION
    images: dict = field(default_factory=dict)  # role -> ImageRef
    gcps: list = field(default_factory=list)  # of ControlPointPair
    transform: TransformRecord | None = None
    water_configs: dict = field(default_factory=default_water_configs)
    annotations: list = field(default_factory=list)  # of ManualAnnotation
    created: str = field(default_factory=_utcnow)
    modified: str = field(default_factory=_utcnow)
    revision: int = 0

    def gcp_by_id(self, gcp_id: str) -> ControlPointPair | None:
        for g in self.gcps:
            if g.id == gcp_id:
                return g
        return None

    def upsert_gcp(self, gcp: ControlPointPair) -> None:
        for i, g in enumerate(self.gcps):
            if g.id == gcp.id:
                self.gcps[i] = gcp
                return
        self.gcps.append(gcp)

    def remove_gcp(self, gcp_id: str) -> bool:
        before = len(self.gcps)
        self.gcps = [g for g in self.gcps if g.id != gcp_id]
        return len(self.gcps) != before

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "name": self.name,
            "images": {role: ref.to_dict() for role, ref in self.images.items()},
            "gcps": [g.to_dict() for g in self.gcps],
            "transform": self.transform.to_dict() if self.transform else None,
            "water_configs": {
                role: cfg.to_dict() for role, cfg in self.water_configs.items()
            },
            "annotations": [a.to_dict() for a in self.annotations],
            "created": self.created,
            "modified": self.modified,
            "revision": self.revision,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Project":
        if not isinstance(d, dict):
            raise SchemaError("project document must be a JSON object")
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise UnsupportedSchema(
                f"schema_version {version!r} not supported (expected {SCHEMA_VERSION})"
            )
        _check_keys(
            d,
            {
                "schema_version",
                "name",
                "images",
                "gcps",
                "transform",
                "water_configs",
                "annotations",
                "created",
                "modified",
                "revision",
            },
            "project",
        )
        try:
            images = {}
            for role, ref in dict(d.get("images", {})).items():
                if role not in ROLES:
                    raise UnsupportedSchema(f"unknown image role {role!r}")
                images[role] = ImageRef.from_dict(ref)
            return cls(
                name=str(d["name"]),
                schema_version=SCHEMA_VERSION,
                images=images,
                gcps=[ControlPointPair.from_dict(g) for g in d.get("gcps", [])],
                transform=(
                    TransformRecord.from_dict(d["transform"])
                    if d.get("transform")
                    else None
                ),
                water_configs={
                    role: WaterColorConfig.from_dict(cfg)
                    for role, cfg in dict(
                        d.get("water_configs", {})
                    ).items()
                },
                annotations=[
                    ManualAnnotation.from_dict(a) for a in d.get("annotations", [])
                ],
                created=str(d.get("created", _utcnow())),
                modified=str(d.get("modified", _utcnow())),
                revision=int(d.get("revision", 0)),
            )
        except UnsupportedSchema:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed project document: {exc}") from exc


def project_path(p: str | Path) -> Path:
    """Accept either the project JSON file or its directory."""
    p = Path(p)
    if p.is_dir():
        return p / "project.json"
    return p


def project_create(path: str | Path, name: str) -> Project:
    """Create a fresh project and persist it immediately."""
    target = project_path(path)
    project = Project(name=name)
    project_save(project, target)
    return project


def project_open(path: str | Path, check_images: bool = True) -> Project:
    """Load and validate a project document.

    Referenced images must exist and decode (MissingImage otherwise) unless
    check_images is disabled, which metadata-only callers use.
    """
    target = project_path(path)
    try:
        text = target.read_text()
    except OSError as exc:
        raise IoError(str(exc)) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{target}: not valid JSON: {exc}") from exc
    project = Project.from_dict(doc)
    if check_images:
        base = target.parent
        for role, ref in project.images.items():
            img = base / ref.path
            if not img.exists():
                raise MissingImage(f"{role} image missing: {img}")
            try:
                load_png(img)
            except IoError as exc:
                raise MissingImage(f"{role} image unreadable: {img}: {exc}") from exc
    return project


def project_save(project: Project, path: str | Path) -> None:
    """Atomic write: temp file in the destination directory, then rename."""
    target = project_path(path)
    project.modified = _utcnow()
    payload = json.dumps(project.to_dict(), indent=2, sort_keys=True) + "\n"
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(
            dir=target.parent, prefix=".project-", suffix=".tmp"
        )
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(payload)
            os.replace(tmp_name, target)
        except BaseException:
            try:
                os.unlink(tmp_name)
            except OSError:
                pass
            raise
    except OSError as exc:
        raise IoError(str(exc)) from exc


def load_role_raster(project: Project, role: str, base_dir: str | Path) -> Raster:
    """Load one of the project's images, preferring the stored GeoReference."""
    ref = project.images.get(role)
    if ref is None:
        raise MissingImage(f"project has no {role!r} image")
    img = Path(base_dir) / ref.path
    if not img.exists():
        raise MissingImage(f"{role} image missing: {img}")
    raster = load_png(img)
    if ref.georef is not None:
        raster.georef = ref.georef
    return raster


def water_config_for(project: Project, role: str) -> WaterColorConfig:
    """Role config, falling back to the declared style preset."""
    if role in project.water_configs:
        return project.water_configs[role]
    ref = project.images.get(role)
    if ref is not None and ref.style in STYLE_PRESETS:
        return STYLE_PRESETS[ref.style]
    return default_water_configs()[role]
