// JSON shapes exchanged with the workbench HTTP API. Field names mirror the
// server payloads exactly; everything optional on the wire is optional here.

export type Point = [number, number];
export type Role = "historical" | "modern";
export type TransformKind = "projective" | "polynomial2";

export interface Gcp {
  id: string;
  src: Point;
  dst: Point;
  enabled: boolean;
  label?: string;
}

export interface GeoRefDto {
  a: number;
  b: number;
  c: number;
  d: number;
  e: number;
  f: number;
}

export interface ImageRefDto {
  path: string;
  style: string;
  georef?: GeoRefDto | null;
}

export interface TransformRecordDto {
  kind: TransformKind;
  forward: unknown;
  backward: unknown;
  rmse_forward: number;
  per_point_residuals: [string, number][];
  gcp_count: number;
  outlier_ids: string[];
}

export interface AnnotationDto {
  vertices: Point[];
  status: string;
  note: string;
  closed: boolean;
}

export interface ProjectDto {
  schema_version: number;
  name: string;
  images: Partial<Record<Role, ImageRefDto>>;
  gcps: Gcp[];
  transform: TransformRecordDto | null;
  water_configs: Record<string, unknown>;
  annotations: AnnotationDto[];
  created: string;
  modified: string;
  revision: number;
}

export interface ProjectEnvelope {
  id: string;
  project: ProjectDto;
}

export interface ResidualRow {
  id: string;
  residual_px: number;
  enabled: boolean;
  outlier: boolean;
  loo_residual_px: number | null;
}

export interface ResidualsDto {
  kind: TransformKind;
  rmse_forward: number;
  entries: ResidualRow[];
}

export interface LegendEntry {
  color: [number, number, number, number];
  meaning: string;
}

export interface ReportDto {
  project_name: string;
  transform: TransformRecordDto;
  residuals: ResidualRow[];
  classes: Record<string, { pixels: number; area_m2: number | null }>;
  polygons: { class: string; area_px: number; label?: string }[];
  annotations: AnnotationDto[];
  legend: Record<string, LegendEntry>;
  artifacts: Record<string, string>;
}

export interface FitResponse {
  transform: TransformRecordDto;
  revision: number;
}

export interface PipelineResponse {
  report: ReportDto;
  revision: number;
}

export interface ApiErrorBody {
  error: string;
  detail: string;
}
