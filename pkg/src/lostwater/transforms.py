"""Plane-to-plane coordinate transforms fitted from ground control points.

Two transform families are supported: projective (homography, 8 dof) and
per-axis second-order polynomial (6 coefficients per axis). Fitting runs on
Hartley-conditioned coordinates (mean-centered, scaled to RMS distance
sqrt(2)) because raw pixel coordinates in the thousands make the design
matrices numerically hostile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AtInfinity,
    DegenerateConfiguration,
    InsufficientPoints,
    NonInvertible,
)

PROJECTIVE_MIN_GCPS = 4
POLYNOMIAL2_MIN_GCPS = 6

# Rank test: smallest/largest singular value of the conditioned design matrix.
_RANK_RATIO = 1e-10
# |det| floor for a usable homography (after h22 = 1 normalization).
_DET_FLOOR = 1e-12
# Homogeneous denominator floor; below this a point is "at infinity".
_W_FLOOR = 1e-12
# Leave-one-out residuals below this are numerical noise, never outliers.
_LOO_FLOOR = 1e-6

Point = tuple[float, float]


@dataclass(frozen=True)
class ControlPointPair:
    """One manually picked correspondence: historical pixel -> modern pixel."""

    id: str
    src: Point
    dst: Point
    enabled: bool = True

    def __post_init__(self):
        for label, (x, y) in (("src", self.src), ("dst", self.dst)):
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError(f"GCP {self.id!r}: {label} coordinates must be finite")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "src": [self.src[0], self.src[1]],
            "dst": [self.dst[0], self.dst[1]],
            "enabled": self.enabled,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ControlPointPair":
        return cls(
            id=str(d["id"]),
            src=(float(d["src"][0]), float(d["src"][1])),
            dst=(float(d["dst"][0]), float(d["dst"][1])),
            enabled=bool(d.get("enabled", True)),
        )


def enabled_points(gcps: list[ControlPointPair]) -> list[ControlPointPair]:
    """Enabled GCPs, with duplicate ids rejected (ids must be unique per set)."""
    seen = set()
    for g in gcps:
        if g.id in seen:
            raise ValueError(f"duplicate GCP id {g.id!r}")
        seen.add(g.id)
    return [g for g in gcps if g.enabled]


@dataclass(frozen=True)
class ProjectiveTransform:
    """Homography with matrix normalized to h[2][2] = 1.

    A point maps through homogeneous division:
    x' = (h00 x + h01 y + h02) / (h20 x + h21 y + 1), y' analogous.
    """

    h: tuple  # 3 rows of 3 floats

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "ProjectiveTransform":
        m = np.asarray(m, dtype=float)
        if abs(m[2, 2]) < _W_FLOOR:
            raise NonInvertible("homography cannot be normalized: h22 ~ 0")
        m = m / m[2, 2]
        if abs(np.linalg.det(m)) <= _DET_FLOOR:
            raise NonInvertible("homography matrix is singular")
        return cls(h=tuple(tuple(float(v) for v in row) for row in m))

    @classmethod
    def identity(cls) -> "ProjectiveTransform":
        return cls.from_matrix(np.eye(3))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.h, dtype=float)

    def apply(self, p: Point) -> Point:
        x, y = p
        h = self.h
        w = h[2][0] * x + h[2][1] * y + 1.0
        if abs(w) <= _W_FLOOR:
            raise AtInfinity(f"point ({x}, {y}) maps to infinity")
        return (
            (h[0][0] * x + h[0][1] * y + h[0][2]) / w,
            (h[1][0] * x + h[1][1] * y + h[1][2]) / w,
        )

    def map_points(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized apply. Returns (mapped (n,2), valid mask).

        Points with denominator ~ 0 are marked invalid instead of raising;
        their output values are zeros. Same arithmetic as apply().
        """
        pts = np.asarray(pts, dtype=float)
        x, y = pts[:, 0], pts[:, 1]
        h = self.h
        w = h[2][0] * x + h[2][1] * y + 1.0
        valid = np.abs(w) > _W_FLOOR
        safe_w = np.where(valid, w, 1.0)
        out = np.empty_like(pts)
        out[:, 0] = (h[0][0] * x + h[0][1] * y + h[0][2]) / safe_w
        out[:, 1] = (h[1][0] * x + h[1][1] * y + h[1][2]) / safe_w
        out[~valid] = 0.0
        return out, valid

    def to_dict(self) -> dict:
        return {"kind": "projective", "matrix": [list(row) for row in self.h]}


@dataclass(frozen=True)
class Polynomial2Transform:
    """Per-axis quadratic map with fixed term order [1, x, y, x^2, x*y, y^2]."""

    cx: tuple  # 6 floats
    cy: tuple  # 6 floats

    def __post_init__(self):
        if len(self.cx) != 6 or len(self.cy) != 6:
            raise ValueError("polynomial2 needs 6 coefficients per axis")

    def apply(self, p: Point) -> Point:
        x, y = p
        t = (1.0, x, y, x * x, x * y, y * y)
        cx, cy = self.cx, self.cy
        return (
            sum(c * v for c, v in zip(cx, t)),
            sum(c * v for c, v in zip(cy, t)),
        )

    def map_points(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pts = np.asarray(pts, dtype=float)
        v = _quadratic_terms(pts)
        out = np.column_stack((v @ np.asarray(self.cx), v @ np.asarray(self.cy)))
        return out, np.ones(len(pts), dtype=bool)

    def to_dict(self) -> dict:
        return {"kind": "polynomial2", "cx": list(self.cx), "cy": list(self.cy)}


Transform2D = ProjectiveTransform | Polynomial2Transform


def transform_from_dict(d: dict) -> Transform2D:
    kind = d.get("kind")
    if kind == "projective":
        return ProjectiveTransform.from_matrix(np.array(d["matrix"], dtype=float))
    if kind == "polynomial2":
        return Polynomial2Transform(
            cx=tuple(float(c) for c in d["cx"]),
            cy=tuple(float(c) for c in d["cy"]),
        )
    raise ValueError(f"unknown transform kind {kind!r}")


def apply(t: Transform2D, p: Point) -> Point:
    """Map a single point through a fitted transform."""
    return t.apply(p)


def _quadratic_terms(pts: np.ndarray) -> np.ndarray:
    x, y = pts[:, 0], pts[:, 1]
    return np.column_stack((np.ones_like(x), x, y, x * x, x * y, y * y))


def _condition(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hartley conditioning: center on the centroid, scale RMS radius to sqrt(2).

    Returns the 3x3 conditioning matrix T and the conditioned points T * p.
    """
    centroid = pts.mean(axis=0)
    rms = math.sqrt(float(np.mean(np.sum((pts - centroid) ** 2, axis=1))))
    if rms < 1e-12:
        raise DegenerateConfiguration("all control points coincide")
    s = math.sqrt(2.0) / rms
    t = np.array(
        [[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]]
    )
    return t, (pts - centroid) * s


def fit_projective(gcps: list[ControlPointPair]) -> ProjectiveTransform:
    """Least-squares homography from >= 4 enabled GCPs (DLT on conditioned points).

    The solution is the smallest-right-singular-vector of the stacked 2n x 9
    system; with exactly 4 non-degenerate points the fit is exact.
    """
    pts = enabled_points(gcps)
    if len(pts) < PROJECTIVE_MIN_GCPS:
        raise InsufficientPoints(
            f"projective fit needs >= {PROJECTIVE_MIN_GCPS} enabled GCPs, got {len(pts)}"
        )
    src = np.array([g.src for g in pts], dtype=float)
    dst = np.array([g.dst for g in pts], dtype=float)

    t_src, ns = _condition(src)
    t_dst, nd = _condition(dst)

    n = len(pts)
    a = np.zeros((2 * n, 9))
    x, y = ns[:, 0], ns[:, 1]
    u, v = nd[:, 0], nd[:, 1]
    a[0::2, 0] = x
    a[0::2, 1] = y
    a[0::2, 2] = 1.0
    a[0::2, 6] = -u * x
    a[0::2, 7] = -u * y
    a[0::2, 8] = -u
    a[1::2, 3] = x
    a[1::2, 4] = y
    a[1::2, 5] = 1.0
    a[1::2, 6] = -v * x
    a[1::2, 7] = -v * y
    a[1::2, 8] = -v

    _, svals, vt = np.linalg.svd(a)
    if svals[7] / svals[0] < _RANK_RATIO:
        raise DegenerateConfiguration(
            "GCP configuration does not determine a homography (rank < 8)"
        )
    h_cond = vt[-1].reshape(3, 3)
    h = np.linalg.inv(t_dst) @ h_cond @ t_src
    try:
        return ProjectiveTransform.from_matrix(h)
    except NonInvertible as exc:
        # Near-collinear sources with inconsistent targets pass the rank test
        # yet still collapse the plane; report the cause, not the symptom.
        raise DegenerateConfiguration(
            f"GCP configuration yields a singular homography: {exc}"
        ) from exc


def fit_polynomial2(gcps: list[ControlPointPair]) -> Polynomial2Transform:
    """Per-axis least-squares quadratic from >= 6 enabled GCPs.

    Solved over conditioned source coordinates via an orthogonal
    decomposition (SVD-backed lstsq), then re-expanded to raw-pixel
    coefficients, so the returned transform evaluates on raw coordinates.
    """
    pts = enabled_points(gcps)
    if len(pts) < POLYNOMIAL2_MIN_GCPS:
        raise InsufficientPoints(
            f"polynomial2 fit needs >= {POLYNOMIAL2_MIN_GCPS} enabled GCPs, got {len(pts)}"
        )
    src = np.array([g.src for g in pts], dtype=float)
    dst = np.array([g.dst for g in pts], dtype=float)

    centroid = src.mean(axis=0)
    rms = math.sqrt(float(np.mean(np.sum((src - centroid) ** 2, axis=1))))
    if rms < 1e-12:
        raise DegenerateConfiguration("all control points coincide")
    s = math.sqrt(2.0) / rms
    ns = (src - centroid) * s

    design = _quadratic_terms(ns)
    svals = np.linalg.svd(design, compute_uv=False)
    if svals[5] / svals[0] < _RANK_RATIO:
        raise DegenerateConfiguration(
            "GCPs lie on a conic or line: quadratic design matrix rank < 6"
        )
    cx_cond, _, _, _ = np.linalg.lstsq(design, dst[:, 0], rcond=None)
    cy_cond, _, _, _ = np.linalg.lstsq(design, dst[:, 1], rcond=None)

    # Conditioned terms as combinations of raw terms: v_cond = M @ v_raw,
    # so raw coefficients are M^T @ c_cond.
    ax, ay = float(centroid[0]), float(centroid[1])
    s2 = s * s
    m = np.array(
        [
            [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [-s * ax, s, 0.0, 0.0, 0.0, 0.0],
            [-s * ay, 0.0, s, 0.0, 0.0, 0.0],
            [s2 * ax * ax, -2.0 * s2 * ax, 0.0, s2, 0.0, 0.0],
            [s2 * ax * ay, -s2 * ay, -s2 * ax, 0.0, s2, 0.0],
            [s2 * ay * ay, 0.0, -2.0 * s2 * ay, 0.0, 0.0, s2],
        ]
    )
    return Polynomial2Transform(
        cx=tuple(float(c) for c in m.T @ cx_cond),
        cy=tuple(float(c) for c in m.T @ cy_cond),
    )


def translate_input(t: Transform2D, dx: float, dy: float) -> Transform2D:
    """Compose a pre-translation: result(p) = t(p + (dx, dy)).

    Lets a fitted backward map be reused on an output canvas whose origin
    sits at (dx, dy) of the original frame. Exact for both kinds: matrices
    compose; quadratics stay quadratic under coordinate shift.
    """
    if isinstance(t, ProjectiveTransform):
        shift = np.array([[1.0, 0.0, dx], [0.0, 1.0, dy], [0.0, 0.0, 1.0]])
        return ProjectiveTransform.from_matrix(t.matrix @ shift)
    cx = _shift_quadratic(t.cx, dx, dy)
    cy = _shift_quadratic(t.cy, dx, dy)
    return Polynomial2Transform(cx=cx, cy=cy)


def _shift_quadratic(c, dx: float, dy: float) -> tuple:
    c0, c1, c2, c3, c4, c5 = c
    return (
        c0 + c1 * dx + c2 * dy + c3 * dx * dx + c4 * dx * dy + c5 * dy * dy,
        c1 + 2.0 * c3 * dx + c4 * dy,
        c2 + c4 * dx + 2.0 * c5 * dy,
        c3,
        c4,
        c5,
    )


def invert_projective(t: ProjectiveTransform) -> ProjectiveTransform:
    """Analytic matrix inverse, renormalized to h22 = 1."""
    m = t.matrix
    if abs(np.linalg.det(m)) <= _DET_FLOOR:
        raise NonInvertible("homography matrix is singular")
    return ProjectiveTransform.from_matrix(np.linalg.inv(m))


@dataclass(frozen=True)
class ResidualReport:
    """Per-GCP forward residuals plus their RMSE (enabled points only)."""

    entries: tuple  # of (gcp id, residual px)
    rmse: float


def residual_report(
    t: Transform2D,
    gcps: list[ControlPointPair],
    include_disabled: bool = False,
) -> ResidualReport:
    """Residual ||apply(t, src) - dst|| per GCP.

    RMSE always covers enabled points only; disabled points appear in the
    entries (for the curation table) only when include_disabled is set.
    """
    entries = []
    sq_sum = 0.0
    n_enabled = 0
    for g in gcps:
        if not (g.enabled or include_disabled):
            continue
        px, py = t.apply(g.src)
        r = math.hypot(px - g.dst[0], py - g.dst[1])
        entries.append((g.id, r))
        if g.enabled:
            sq_sum += r * r
            n_enabled += 1
    rmse = math.sqrt(sq_sum / n_enabled) if n_enabled else 0.0
    return ResidualReport(entries=tuple(entries), rmse=rmse)


@dataclass(frozen=True)
class LeaveOneOutEntry:
    gcp_id: str
    loo_residual: float
    outlier: bool


def leave_one_out(gcps: list[ControlPointPair], kind: str) -> list[LeaveOneOutEntry]:
    """Cross-validated residual per enabled GCP: refit without it, test on it.

    A point is flagged an outlier when its residual exceeds 3x the median of
    all leave-one-out residuals; residuals below 1e-6 px are numerical noise
    and never flagged, so exact configurations report no outliers.

    A point whose removal leaves a degenerate configuration is structurally
    essential to the fit — it cannot be cross-validated, let alone called an
    outlier. Such points report loo_residual = nan, outlier = False, and are
    excluded from the median.
    """
    fit = _fitter(kind)
    minimum = _min_gcps(kind)
    pts = enabled_points(gcps)
    if len(pts) < minimum + 1:
        raise InsufficientPoints(
            f"leave-one-out with kind={kind} needs >= {minimum + 1} enabled GCPs"
        )
    residuals = []
    for i, g in enumerate(pts):
        subset = pts[:i] + pts[i + 1 :]
        try:
            t = fit(subset)
        except DegenerateConfiguration:
            residuals.append(math.nan)
            continue
        px, py = t.apply(g.src)
        residuals.append(math.hypot(px - g.dst[0], py - g.dst[1]))
    finite = [r for r in residuals if not math.isnan(r)]
    median = float(np.median(finite)) if finite else 0.0
    threshold = max(3.0 * median, _LOO_FLOOR)
    return [
        LeaveOneOutEntry(
            gcp_id=g.id,
            loo_residual=r,
            outlier=(not math.isnan(r)) and r > threshold,
        )
        for g, r in zip(pts, residuals)
    ]


TRANSFORM_KINDS = ("projective", "polynomial2")


def _fitter(kind: str):
    if kind == "projective":
        return fit_projective
    if kind == "polynomial2":
        return fit_polynomial2
    raise ValueError(f"unknown transform kind {kind!r}")


def _min_gcps(kind: str) -> int:
    return PROJECTIVE_MIN_GCPS if kind == "projective" else POLYNOMIAL2_MIN_GCPS


@dataclass(frozen=True)
class TransformRecord:
    """A fitted mapping in both directions plus its fit diagnostics.

    forward maps historical -> modern pixels; backward maps modern ->
    historical (the direction the inverse-mapping warp consumes). For the
    projective kind backward is the analytic inverse; polynomial2 has no
    closed-form inverse so backward is an independent fit with the point
    roles swapped.
    """

    kind: str
    forward: Transform2D
    backward: Transform2D
    rmse_forward: float
    per_point_residuals: tuple  # of (gcp id, residual px)
    gcp_count: int
    outlier_ids: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "forward": self.forward.to_dict(),
            "backward": self.backward.to_dict(),
            "rmse_forward": self.rmse_forward,
            "per_point_residuals": [[i, r] for i, r in self.per_point_residuals],
            "gcp_count": self.gcp_count,
            "outlier_ids": list(self.outlier_ids),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransformRecord":
        return cls(
            kind=str(d["kind"]),
            forward=transform_from_dict(d["forward"]),
            backward=transform_from_dict(d["backward"]),
            rmse_forward=float(d["rmse_forward"]),
            per_point_residuals=tuple(
                (str(i), float(r)) for i, r in d["per_point_residuals"]
            ),
            gcp_count=int(d["gcp_count"]),
            outlier_ids=tuple(str(i) for i in d.get("outlier_ids", [])),
        )


def fit_transform_record(gcps: list[ControlPointPair], kind: str) -> TransformRecord:
    """Fit forward and backward transforms from the same enabled GCP set."""
    if kind == "projective":
        forward = fit_projective(gcps)
        backward = invert_projective(forward)
    elif kind == "polynomial2":
        forward = fit_polynomial2(gcps)
        swapped = [
            ControlPointPair(id=g.id, src=g.dst, dst=g.src, enabled=g.enabled)
            for g in gcps
        ]
        backward = fit_polynomial2(swapped)
    else:
        raise ValueError(f"unknown transform kind {kind!r}")

    report = residual_report(forward, gcps)
    enabled = enabled_points(gcps)
    outliers: tuple = ()
    if len(enabled) >= _min_gcps(kind) + 1:
        outliers = tuple(e.gcp_id for e in leave_one_out(gcps, kind) if e.outlier)
    return TransformRecord(
        kind=kind,
        forward=forward,
        backward=backward,
        rmse_forward=report.rmse,
        per_point_residuals=report.entries,
        gcp_count=len(enabled),
        outlier_ids=outliers,
    )
