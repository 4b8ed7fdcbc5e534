// Per-tab session state. Everything a view needs that is not on the server
// lives here; reloading a page rebuilds the rest from GET /projects/{id}.

import type { Gcp, Point, Role } from "./types.js";

export type Tool = "pick-gcp" | "pan-zoom" | "annotate";

export interface PendingPoint {
  canvas: Role;
  point: Point;
}

export interface UiSession {
  projectId: string;
  revision: number;
  tool: Tool;
  pending: PendingPoint | null;
  overlayAlpha: number;
}

export function newSession(projectId: string, revision: number): UiSession {
  return {
    projectId,
    revision,
    tool: "pick-gcp",
    pending: null,
    overlayAlpha: 0.6,
  };
}

function inBounds(point: Point, width: number, height: number): boolean {
  return (
    point[0] >= 0 && point[0] <= width && point[1] >= 0 && point[1] <= height
  );
}

/** Smallest gN not already taken, so ids stay short and human-readable. */
export function nextGcpId(existing: Gcp[]): string {
  const taken = new Set(existing.map((g) => g.id));
  for (let n = 1; ; n++) {
    const id = `g${n}`;
    if (!taken.has(id)) return id;
  }
}

export interface PickResult {
  session: UiSession;
  /** Set only when the second click of a pair just landed. A lone pending
   *  point is never turned into a GCP. */
  completed: Gcp | null;
}

/**
 * One click in pick-gcp mode. The first click on either canvas becomes the
 * pending point; a click on the other canvas completes the pair (src is
 * always the historical side); a second click on the same canvas replaces
 * the pending point. Clicks outside the image are ignored.
 */
export function pickAt(
  session: UiSession,
  canvas: Role,
  point: Point,
  imageSize: { width: number; height: number },
  existing: Gcp[],
): PickResult {
  if (session.tool !== "pick-gcp") return { session, completed: null };
  if (!inBounds(point, imageSize.width, imageSize.height)) {
    return { session, completed: null };
  }
  const pending = session.pending;
  if (pending === null || pending.canvas === canvas) {
    return {
      session: { ...session, pending: { canvas, point } },
      completed: null,
    };
  }
  const historical = pending.canvas === "historical" ? pending.point : point;
  const modern = pending.canvas === "modern" ? pending.point : point;
  const gcp: Gcp = {
    id: nextGcpId(existing),
    src: historical,
    dst: modern,
    enabled: true,
  };
  return { session: { ...session, pending: null }, completed: gcp };
}

/** Escape: drop the pending point without creating anything. */
export function cancelPending(session: UiSession): UiSession {
  return session.pending === null ? session : { ...session, pending: null };
}

export function setTool(session: UiSession, tool: Tool): UiSession {
  // switching tools abandons a half-picked pair rather than carrying it
  return { ...session, tool, pending: null };
}

export function setOverlayAlpha(session: UiSession, alpha: number): UiSession {
  if (!(alpha >= 0 && alpha <= 1)) throw new RangeError(`alpha ${alpha}`);
  return { ...session, overlayAlpha: alpha };
}

/** Adopt the server's revision after any acknowledged mutation or refetch. */
export function syncRevision(session: UiSession, revision: number): UiSession {
  return { ...session, revision };
}
