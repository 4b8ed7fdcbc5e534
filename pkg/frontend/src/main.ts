// DOM wiring for the workbench. All decisions live in the logic modules;
// this file only moves values between them and the page.

import { ApiClient, ApiError } from "./api.js";
import { addVertex, canCommit, commitDraft, emptyDraft, type PolylineDraft } from "./annotate.js";
import {
  allVisible,
  CLASS_NAMES,
  cssColor,
  filterClasses,
  toggleClass,
  type ClassVisibility,
} from "./changemap.js";
import { applyMutation, bareRevision, envelopeRevision } from "./controller.js";
import { fitButtonState, formatResidual, MIN_GCPS, sortRows, type SortKey } from "./residuals.js";
import {
  cancelPending,
  newSession,
  pickAt,
  setOverlayAlpha,
  setTool,
  type Tool,
  type UiSession,
} from "./session.js";
import type {
  Gcp,
  LegendEntry,
  ProjectDto,
  ResidualsDto,
  Role,
  TransformKind,
} from "./types.js";
import { MAX_SCALE, MIN_SCALE, snapToPixelCenter } from "./viewport.js";

const api = new ApiClient("");

interface AppState {
  session: UiSession | null;
  project: ProjectDto | null;
  residuals: ResidualsDto | null;
  scale: number;
  sortKey: SortKey;
  sortDescending: boolean;
  visibility: ClassVisibility;
  draft: PolylineDraft;
  legend: Record<string, LegendEntry> | null;
}

const state: AppState = {
  session: null,
  project: null,
  residuals: null,
  scale: 1,
  sortKey: "id",
  sortDescending: false,
  visibility: allVisible(),
  draft: emptyDraft(),
  legend: null,
};

// ---------------------------------------------------------------------------
// tiny DOM helpers

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function setStatus(text: string, isError = false) {
  const bar = byId<HTMLDivElement>("status");
  bar.textContent = text;
  bar.classList.toggle("error", isError);
}

function showApiError(error: unknown, hint = "") {
  if (error instanceof ApiError) {
    setStatus(`${error.name}: ${error.detail}${hint ? ` — ${hint}` : ""}`, true);
  } else {
    setStatus(String(error), true);
  }
}

// ---------------------------------------------------------------------------
// layout

function buildLayout() {
  const app = byId<HTMLDivElement>("app");
  app.innerHTML = `
    <header>
      <strong>gcp studio</strong>
      <input id="project-name" placeholder="project name" />
      <button id="create-project">create</button>
      <input id="project-id" placeholder="project id" />
      <button id="open-project">open</button>
      <span id="revision-badge"></span>
    </header>
    <div id="status"></div>
    <section id="uploads">
      <label>historical <input type="file" id="upload-historical" accept="image/png" /></label>
      <label>modern <input type="file" id="upload-modern" accept="image/png" /></label>
      <label>modern world file <input type="file" id="upload-world" /></label>
    </section>
    <section id="toolbar">
      <span id="tools">
        <label><input type="radio" name="tool" value="pick-gcp" checked />pick GCP</label>
        <label><input type="radio" name="tool" value="pan-zoom" />pan/zoom</label>
        <label><input type="radio" name="tool" value="annotate" />annotate</label>
      </span>
      <button id="zoom-out">−</button>
      <span id="zoom-label">1×</span>
      <button id="zoom-in">+</button>
      <select id="kind">
        <option value="projective">projective</option>
        <option value="polynomial2">polynomial2</option>
      </select>
      <button id="fit">fit</button>
      <button id="pipeline">run pipeline</button>
      <label>overlay alpha
        <input type="range" id="alpha" min="0" max="1" step="0.05" value="0.6" />
        <span id="alpha-label">0.60</span>
      </label>
    </section>
    <section id="canvases">
      <figure class="pane" id="pane-historical">
        <figcaption>historical</figcaption>
        <div class="scroll"><div class="content">
          <img id="img-historical" alt="historical map" />
          <div class="markers" id="markers-historical"></div>
        </div></div>
      </figure>
      <figure class="pane" id="pane-modern">
        <figcaption>modern</figcaption>
        <div class="scroll"><div class="content">
          <img id="img-modern" alt="modern map" />
          <img id="img-overlay" alt="" />
          <canvas id="change-canvas"></canvas>
          <svg id="annotation-layer"></svg>
          <div class="markers" id="markers-modern"></div>
        </div></div>
      </figure>
    </section>
    <section id="panels">
      <div id="residual-panel">
        <h3 id="rmse"></h3>
        <table id="gcp-table">
          <thead><tr>
            <th data-sort="id">id</th><th>historical</th><th>modern</th>
            <th data-sort="residual">residual</th><th>LOO</th>
            <th data-sort="outlier">outlier</th><th>on</th><th></th>
          </tr></thead>
          <tbody></tbody>
        </table>
      </div>
      <div id="change-panel">
        <h3>change map</h3>
        <div id="class-toggles"></div>
        <div id="artifact-links"></div>
        <div id="pipeline-cta" hidden>
          <p>No artifacts yet.</p>
          <button id="pipeline-cta-button">run the pipeline</button>
        </div>
      </div>
    </section>
  `;
}

// ---------------------------------------------------------------------------
// rendering

function render() {
  const session = state.session;
  byId<HTMLSpanElement>("revision-badge").textContent = session
    ? `#${session.projectId} rev ${session.revision}`
    : "no project";
  renderZoom();
  renderImages();
  renderMarkers();
  renderTable();
  renderFitButton();
  renderToggles();
  renderAnnotations();
}

function renderZoom() {
  byId<HTMLSpanElement>("zoom-label").textContent = `${state.scale}×`;
  for (const role of ["historical", "modern"] as Role[]) {
    const img = byId<HTMLImageElement>(`img-${role}`);
    if (img.naturalWidth) {
      img.style.width = `${img.naturalWidth * state.scale}px`;
    }
  }
  const overlay = byId<HTMLImageElement>("img-overlay");
  const modern = byId<HTMLImageElement>("img-modern");
  if (modern.naturalWidth) {
    overlay.style.width = `${modern.naturalWidth * state.scale}px`;
  }
}

function renderImages() {
  const session = state.session;
  const project = state.project;
  if (!session || !project) return;
  for (const role of ["historical", "modern"] as Role[]) {
    const img = byId<HTMLImageElement>(`img-${role}`);
    const want = project.images[role] ? api.imageUrl(session.projectId, role) : "";
    if (img.dataset.src !== want) {
      img.dataset.src = want;
      if (want) img.src = want;
      img.onload = renderZoom;
    }
  }
  const overlay = byId<HTMLImageElement>("img-overlay");
  if (project.transform) {
    overlay.src = api.overlayUrl(session.projectId, session.overlayAlpha);
    overlay.style.opacity = "1";
  } else {
    overlay.removeAttribute("src");
    overlay.style.opacity = "0";
  }
}

function markerNode(index: number, x: number, y: number, pending = false) {
  const node = el("div", pending ? "marker pending" : "marker");
  node.textContent = pending ? "?" : String(index);
  node.style.left = `${x * state.scale}px`;
  node.style.top = `${y * state.scale}px`;
  return node;
}

function renderMarkers() {
  const project = state.project;
  const session = state.session;
  for (const role of ["historical", "modern"] as Role[]) {
    const layer = byId<HTMLDivElement>(`markers-${role}`);
    layer.replaceChildren();
    if (!project) continue;
    project.gcps.forEach((g, i) => {
      const [x, y] = role === "historical" ? g.src : g.dst;
      layer.appendChild(markerNode(i + 1, x, y));
    });
    if (session?.pending && session.pending.canvas === role) {
      const [x, y] = session.pending.point;
      layer.appendChild(markerNode(0, x, y, true));
    }
  }
}

function residualFor(id: string) {
  return state.residuals?.entries.find((e) => e.id === id) ?? null;
}

function renderTable() {
  const body = byId<HTMLTableElement>("gcp-table").tBodies[0];
  body.replaceChildren();
  const project = state.project;
  if (!project) return;
  byId<HTMLHeadingElement>("rmse").textContent = state.residuals
    ? `RMSE ${state.residuals.rmse_forward.toFixed(2)} px (${state.residuals.kind})`
    : "no fit yet";

  const rows = state.residuals
    ? sortRows(state.residuals.entries, state.sortKey, state.sortDescending)
    : project.gcps.map((g) => ({
        id: g.id,
        residual_px: NaN,
        enabled: g.enabled,
        outlier: false,
        loo_residual_px: null,
      }));

  for (const row of rows) {
    const gcp = project.gcps.find((g) => g.id === row.id);
    if (!gcp) continue;
    const tr = el("tr");
    if (row.outlier) tr.classList.add("outlier");
    tr.appendChild(el("td", "", gcp.id));
    tr.appendChild(el("td", "", `${gcp.src[0]}, ${gcp.src[1]}`));
    tr.appendChild(el("td", "", `${gcp.dst[0]}, ${gcp.dst[1]}`));
    tr.appendChild(
      el("td", "", Number.isNaN(row.residual_px) ? "—" : formatResidual(row.residual_px)),
    );
    tr.appendChild(el("td", "", formatResidual(row.loo_residual_px)));
    tr.appendChild(el("td", "", row.outlier ? "⚠" : ""));

    const toggleCell = el("td");
    const toggle = el("input") as HTMLInputElement;
    toggle.type = "checkbox";
    toggle.checked = gcp.enabled;
    toggle.addEventListener("click", (event) => {
      event.stopPropagation();
      void toggleGcpEnabled(gcp);
    });
    toggleCell.appendChild(toggle);
    tr.appendChild(toggleCell);

    const deleteCell = el("td");
    const remove = el("button", "", "×");
    remove.addEventListener("click", (event) => {
      event.stopPropagation();
      void deleteGcp(gcp.id);
    });
    deleteCell.appendChild(remove);
    tr.appendChild(deleteCell);

    tr.addEventListener("click", () => panToGcp(gcp));
    body.appendChild(tr);
  }
}

function renderFitButton() {
  const kind = byId<HTMLSelectElement>("kind").value as TransformKind;
  const enabled = state.project?.gcps.filter((g) => g.enabled).length ?? 0;
  const fit = byId<HTMLButtonElement>("fit");
  const buttonState = fitButtonState(kind, enabled);
  fit.disabled = buttonState.disabled || !state.session;
  fit.title = buttonState.tooltip ?? "";
}

function renderToggles() {
  const host = byId<HTMLDivElement>("class-toggles");
  host.replaceChildren();
  const legend = state.legend;
  if (!legend) return;
  for (const name of CLASS_NAMES) {
    const entry = legend[name];
    if (!entry) continue;
    const label = el("label", "class-toggle");
    const box = el("input") as HTMLInputElement;
    box.type = "checkbox";
    box.checked = state.visibility[name];
    box.addEventListener("change", () => {
      state.visibility = toggleClass(state.visibility, name);
      void repaintChangeMap();
    });
    const swatch = el("span", "swatch");
    swatch.style.background = cssColor(entry);
    label.append(box, swatch, `${name} — ${entry.meaning}`);
    host.appendChild(label);
  }
}

function renderAnnotations() {
  const svg = byId<SVGSVGElement & HTMLElement>("annotation-layer");
  svg.replaceChildren();
  const modern = byId<HTMLImageElement>("img-modern");
  if (modern.naturalWidth) {
    svg.setAttribute("viewBox", `0 0 ${modern.naturalWidth} ${modern.naturalHeight}`);
    svg.style.width = `${modern.naturalWidth * state.scale}px`;
  }
  const violet = "rgb(148, 0, 211)";
  const lines = [...(state.project?.annotations ?? [])];
  for (const annotation of lines) {
    const poly = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
    poly.setAttribute("points", annotation.vertices.map(([x, y]) => `${x},${y}`).join(" "));
    poly.setAttribute("stroke", violet);
    poly.setAttribute("stroke-width", "3");
    poly.setAttribute("fill", "none");
    svg.appendChild(poly);
  }
  if (state.draft.vertices.length > 0) {
    const poly = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
    poly.setAttribute("points", state.draft.vertices.map(([x, y]) => `${x},${y}`).join(" "));
    poly.setAttribute("stroke", violet);
    poly.setAttribute("stroke-dasharray", "4 3");
    poly.setAttribute("stroke-width", "2");
    poly.setAttribute("fill", "none");
    svg.appendChild(poly);
  }
}

async function repaintChangeMap() {
  const session = state.session;
  const canvas = byId<HTMLCanvasElement>("change-canvas");
  const context = canvas.getContext("2d");
  if (!session || !context || !state.legend) return;
  const image = new Image();
  image.crossOrigin = "anonymous";
  image.src = api.artifactUrl(session.projectId, "change.png");
  try {
    await image.decode();
  } catch {
    canvas.hidden = true;
    byId<HTMLDivElement>("pipeline-cta").hidden = false;
    return;
  }
  byId<HTMLDivElement>("pipeline-cta").hidden = true;
  canvas.hidden = false;
  canvas.width = image.naturalWidth;
  canvas.height = image.naturalHeight;
  canvas.style.width = `${image.naturalWidth * state.scale}px`;
  context.drawImage(image, 0, 0);
  const data = context.getImageData(0, 0, canvas.width, canvas.height);
  const filtered = filterClasses(data.data, state.legend, state.visibility);
  context.putImageData(
    new ImageData(new Uint8ClampedArray(filtered), canvas.width, canvas.height),
    0,
    0,
  );
}

function renderArtifactLinks() {
  const host = byId<HTMLDivElement>("artifact-links");
  host.replaceChildren();
  const session = state.session;
  if (!session) return;
  for (const name of ["change.geojson", "report.json", "report.html"] as const) {
    const link = el("a", "", name);
    link.setAttribute("href", api.artifactUrl(session.projectId, name));
    link.setAttribute("target", "_blank");
    host.appendChild(link);
  }
}

// ---------------------------------------------------------------------------
// actions

async function refreshProject() {
  const session = state.session;
  if (!session) return;
  const envelope = await api.getProject(session.projectId);
  state.project = envelope.project;
  state.session = { ...session, revision: envelope.project.revision };
  if (envelope.project.transform) {
    try {
      state.residuals = await api.residuals(session.projectId);
    } catch {
      state.residuals = null;
    }
  } else {
    state.residuals = null;
  }
  render();
  renderArtifactLinks();
  void repaintChangeMap();
}

async function openProject(id: string) {
  try {
    const envelope = await api.getProject(id);
    state.session = newSession(envelope.id, envelope.project.revision);
    state.project = envelope.project;
    state.residuals = null;
    state.legend = null;
    setStatus(`opened ${envelope.project.name}`);
    await loadLegend();
    await refreshProject();
  } catch (error) {
    showApiError(error);
  }
}

async function loadLegend() {
  const session = state.session;
  if (!session) return;
  try {
    const response = await fetch(api.artifactUrl(session.projectId, "report.json"));
    if (response.ok) {
      const report = await response.json();
      state.legend = report.legend;
      return;
    }
  } catch {
    // fall through to the built-in legend colors
  }
  state.legend = {
    LOST: { color: [210, 30, 30, 255], meaning: "waterway disappeared" },
    PERSISTENT: { color: [30, 160, 70, 255], meaning: "still present" },
    NEW: { color: [40, 80, 220, 255], meaning: "new waterway" },
    UNDERGROUND: {
      color: [148, 0, 211, 255],
      meaning: "possibly underground (manual annotation)",
    },
  };
}

async function commitGcp(gcp: Gcp) {
  const session = state.session;
  if (!session) return;
  const result = await applyMutation(
    api,
    session,
    (revision) => api.putGcp(session.projectId, gcp, revision),
    envelopeRevision,
  );
  state.session = result.session;
  if (result.ok) {
    state.project = result.value.project;
    setStatus(`added ${gcp.id}`);
  } else {
    state.project = result.project;
    setStatus("project changed elsewhere; reloaded, your point was not added", true);
  }
  render();
}

async function toggleGcpEnabled(gcp: Gcp) {
  const session = state.session;
  if (!session) return;
  const flipped = { ...gcp, enabled: !gcp.enabled };
  const result = await applyMutation(
    api,
    session,
    (revision) => api.putGcp(session.projectId, flipped, revision),
    envelopeRevision,
  );
  state.session = result.session;
  state.project = result.ok ? result.value.project : result.project;
  render();
}

async function deleteGcp(gcpId: string) {
  const session = state.session;
  if (!session) return;
  const result = await applyMutation(
    api,
    session,
    (revision) => api.deleteGcp(session.projectId, gcpId, revision),
    envelopeRevision,
  );
  state.session = result.session;
  state.project = result.ok ? result.value.project : result.project;
  render();
}

async function runFit() {
  const session = state.session;
  if (!session) return;
  const kind = byId<HTMLSelectElement>("kind").value as TransformKind;
  try {
    const result = await applyMutation(
      api,
      session,
      (revision) => api.fit(session.projectId, kind, revision),
      bareRevision,
    );
    state.session = result.session;
    if (result.ok) {
      setStatus(`fit ok, RMSE ${result.value.transform.rmse_forward.toFixed(2)} px`);
      await refreshProject();
    } else {
      state.project = result.project;
      setStatus("project changed elsewhere; reloaded without fitting", true);
      render();
    }
  } catch (error) {
    showApiError(error, `try adding GCPs or disabling outliers (minimum ${MIN_GCPS[kind]})`);
  }
}

async function runPipeline() {
  const session = state.session;
  if (!session) return;
  setStatus("pipeline running…");
  try {
    const result = await applyMutation(
      api,
      session,
      (revision) =>
        api.runPipeline(
          session.projectId,
          { overlay_alpha: session.overlayAlpha },
          revision,
        ),
      bareRevision,
    );
    state.session = result.session;
    if (result.ok) {
      state.legend = result.value.report.legend;
      setStatus("pipeline finished");
      await refreshProject();
    } else {
      setStatus("project changed elsewhere; reloaded without running", true);
      render();
    }
  } catch (error) {
    showApiError(error);
  }
}

async function commitAnnotation() {
  const session = state.session;
  if (!session || !canCommit(state.draft)) return;
  const annotation = commitDraft(state.draft);
  const result = await applyMutation(
    api,
    session,
    (revision) => api.postAnnotation(session.projectId, annotation, revision),
    envelopeRevision,
  );
  state.session = result.session;
  state.project = result.ok ? result.value.project : result.project;
  state.draft = emptyDraft();
  render();
}

function panToGcp(gcp: Gcp) {
  const panes: [Role, [number, number]][] = [
    ["historical", gcp.src],
    ["modern", gcp.dst],
  ];
  for (const [role, [x, y]] of panes) {
    const scroll = byId<HTMLElement>(`pane-${role}`).querySelector(".scroll");
    if (!(scroll instanceof HTMLElement)) continue;
    scroll.scrollLeft = Math.max(0, x * state.scale - scroll.clientWidth / 2);
    scroll.scrollTop = Math.max(0, y * state.scale - scroll.clientHeight / 2);
  }
}

function handleCanvasClick(role: Role, event: MouseEvent) {
  const session = state.session;
  const project = state.project;
  if (!session || !project) return;
  const img = byId<HTMLImageElement>(`img-${role}`);
  if (!img.naturalWidth) return;
  const rect = img.getBoundingClientRect();
  const point = snapToPixelCenter([
    (event.clientX - rect.left) / state.scale,
    (event.clientY - rect.top) / state.scale,
  ]);

  if (session.tool === "annotate") {
    if (role !== "modern") return;
    state.draft = addVertex(state.draft, point);
    renderAnnotations();
    return;
  }

  const result = pickAt(session, role, point, {
    width: img.naturalWidth,
    height: img.naturalHeight,
  }, project.gcps);
  state.session = result.session;
  if (result.completed) {
    void commitGcp(result.completed);
  } else {
    renderMarkers();
  }
}

async function uploadImage(role: Role, imageInput: HTMLInputElement) {
  const session = state.session;
  const file = imageInput.files?.[0];
  if (!session || !file) return;
  const world =
    role === "modern"
      ? byId<HTMLInputElement>("upload-world").files?.[0] ?? undefined
      : undefined;
  try {
    const envelope = await api.uploadImage(session.projectId, role, file, world);
    state.project = envelope.project;
    state.session = { ...session, revision: envelope.project.revision };
    setStatus(`uploaded ${role} image`);
    render();
  } catch (error) {
    showApiError(error);
  }
}

// ---------------------------------------------------------------------------
// event wiring

function wireEvents() {
  byId<HTMLButtonElement>("create-project").addEventListener("click", async () => {
    const name = byId<HTMLInputElement>("project-name").value.trim();
    if (!name) return setStatus("name the project first", true);
    try {
      const envelope = await api.createProject(name);
      byId<HTMLInputElement>("project-id").value = envelope.id;
      await openProject(envelope.id);
    } catch (error) {
      showApiError(error);
    }
  });
  byId<HTMLButtonElement>("open-project").addEventListener("click", () => {
    const id = byId<HTMLInputElement>("project-id").value.trim();
    if (id) void openProject(id);
  });

  for (const role of ["historical", "modern"] as Role[]) {
    const input = byId<HTMLInputElement>(`upload-${role}`);
    input.addEventListener("change", () => void uploadImage(role, input));
    byId<HTMLElement>(`pane-${role}`)
      .querySelector(".content")!
      .addEventListener("click", (event) =>
        handleCanvasClick(role, event as MouseEvent),
      );
  }

  document.addEventListener("keydown", (event) => {
    if (event.key === "Escape") {
      if (state.session) state.session = cancelPending(state.session);
      state.draft = emptyDraft();
      renderMarkers();
      renderAnnotations();
    }
    if (event.key === "Enter" && state.session?.tool === "annotate") {
      void commitAnnotation();
    }
  });

  for (const radio of document.querySelectorAll<HTMLInputElement>('input[name="tool"]')) {
    radio.addEventListener("change", () => {
      if (state.session && radio.checked) {
        state.session = setTool(state.session, radio.value as Tool);
        state.draft = emptyDraft();
        render();
      }
    });
  }

  byId<HTMLButtonElement>("zoom-in").addEventListener("click", () => {
    if (state.scale * 2 <= MAX_SCALE) {
      state.scale *= 2;
      render();
      void repaintChangeMap();
    }
  });
  byId<HTMLButtonElement>("zoom-out").addEventListener("click", () => {
    if (state.scale / 2 >= MIN_SCALE) {
      state.scale /= 2;
      render();
      void repaintChangeMap();
    }
  });

  byId<HTMLSelectElement>("kind").addEventListener("change", renderFitButton);
  byId<HTMLButtonElement>("fit").addEventListener("click", () => void runFit());
  byId<HTMLButtonElement>("pipeline").addEventListener("click", () => void runPipeline());
  byId<HTMLButtonElement>("pipeline-cta-button").addEventListener(
    "click",
    () => void runPipeline(),
  );

  const alpha = byId<HTMLInputElement>("alpha");
  alpha.addEventListener("input", () => {
    const value = Number(alpha.value);
    byId<HTMLSpanElement>("alpha-label").textContent = value.toFixed(2);
    if (state.session) {
      state.session = setOverlayAlpha(state.session, value);
      renderImages(); // re-requests overlay.png at the chosen alpha
    }
  });

  for (const th of document.querySelectorAll<HTMLTableCellElement>("th[data-sort]")) {
    th.addEventListener("click", () => {
      const key = th.dataset.sort as SortKey;
      state.sortDescending = state.sortKey === key ? !state.sortDescending : key === "residual";
      state.sortKey = key;
      renderTable();
    });
  }

  // keep the two panes' scroll positions linked
  const scrolls = Array.from(document.querySelectorAll<HTMLElement>(".scroll"));
  let syncing = false;
  for (const pane of scrolls) {
    pane.addEventListener("scroll", () => {
      if (syncing) return;
      syncing = true;
      for (const other of scrolls) {
        if (other !== pane) {
          other.scrollLeft = pane.scrollLeft;
          other.scrollTop = pane.scrollTop;
        }
      }
      syncing = false;
    });
  }
}

function start() {
  buildLayout();
  wireEvents();
  setStatus("create or open a project to begin");
}

if (typeof document !== "undefined") {
  start();
}
