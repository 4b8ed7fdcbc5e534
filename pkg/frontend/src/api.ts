// Thin typed client over the workbench HTTP API. Every mutation can carry
// the caller's revision; the server answers 409 when it is stale, which
// surfaces here as ApiError with name "RevisionConflict".

import type {
  AnnotationDto,
  FitResponse,
  Gcp,
  PipelineResponse,
  ProjectEnvelope,
  ResidualsDto,
  Role,
  TransformKind,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public override name: string,
    public detail: string,
  ) {
    super(`${name}: ${detail}`);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function parseError(response: Response): Promise<ApiError> {
  let name = "HttpError";
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (body && typeof body.error === "string") {
      name = body.error;
      detail = String(body.detail ?? "");
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, name, detail);
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  private json(method: string, body: unknown): RequestInit {
    return {
      method,
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    };
  }

  createProject(name: string): Promise<ProjectEnvelope> {
    return this.request("/projects", this.json("POST", { name }));
  }

  getProject(id: string): Promise<ProjectEnvelope> {
    return this.request(`/projects/${id}`);
  }

  putGcp(id: string, gcp: Gcp, revision: number): Promise<ProjectEnvelope> {
    return this.request(
      `/projects/${id}/gcps/${gcp.id}`,
      this.json("PUT", { ...gcp, revision }),
    );
  }

  putGcps(id: string, gcps: Gcp[], revision: number): Promise<ProjectEnvelope> {
    return this.request(
      `/projects/${id}/gcps`,
      this.json("PUT", { gcps, revision }),
    );
  }

  deleteGcp(id: string, gcpId: string, revision: number): Promise<ProjectEnvelope> {
    return this.request(
      `/projects/${id}/gcps/${gcpId}?revision=${revision}`,
      { method: "DELETE" },
    );
  }

  fit(id: string, kind: TransformKind, revision: number): Promise<FitResponse> {
    return this.request(
      `/projects/${id}/fit?kind=${kind}&revision=${revision}`,
      { method: "POST" },
    );
  }

  residuals(id: string): Promise<ResidualsDto> {
    return this.request(`/projects/${id}/residuals`);
  }

  runPipeline(
    id: string,
    options: { kind?: TransformKind; overlay_alpha?: number },
    revision: number,
  ): Promise<PipelineResponse> {
    return this.request(
      `/projects/${id}/pipeline`,
      this.json("POST", { ...options, revision }),
    );
  }

  postAnnotation(
    id: string,
    annotation: Omit<AnnotationDto, "note" | "closed"> & Partial<AnnotationDto>,
    revision: number,
  ): Promise<ProjectEnvelope> {
    return this.request(
      `/projects/${id}/annotations`,
      this.json("POST", { ...annotation, revision }),
    );
  }

  async uploadImage(
    id: string,
    role: Role,
    image: Blob,
    world?: Blob,
  ): Promise<ProjectEnvelope> {
    const form = new FormData();
    form.append("image", image, `${role}.png`);
    if (world) form.append("world", world, `${role}.pgw`);
    return this.request(`/projects/${id}/images/${role}`, {
      method: "POST",
      body: form,
    });
  }

  // URL builders for <img> sources; the browser fetches these itself.
  imageUrl(id: string, role: Role): string {
    return `${this.baseUrl}/projects/${id}/images/${role}`;
  }

  overlayUrl(id: string, alpha: number): string {
    return `${this.baseUrl}/projects/${id}/overlay.png?alpha=${alpha}`;
  }

  artifactUrl(id: string, name: "change.png" | "change.geojson" | "report.json" | "report.html"): string {
    return `${this.baseUrl}/projects/${id}/${name}`;
  }
}
