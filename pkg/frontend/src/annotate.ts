// Underground-waterway polyline tool: collect vertices on the modern canvas,
// commit to the server as an UNDERGROUND annotation, Escape throws the draft
// away. Nothing is sent until commit.

import type { AnnotationDto, Point } from "./types.js";

export interface PolylineDraft {
  vertices: Point[];
}

export function emptyDraft(): PolylineDraft {
  return { vertices: [] };
}

export function addVertex(draft: PolylineDraft, point: Point): PolylineDraft {
  return { vertices: [...draft.vertices, point] };
}

export function canCommit(draft: PolylineDraft): boolean {
  return draft.vertices.length >= 2;
}

export function commitDraft(draft: PolylineDraft, note = ""): AnnotationDto {
  if (!canCommit(draft)) {
    throw new Error("a polyline needs at least 2 vertices");
  }
  return {
    vertices: draft.vertices,
    status: "UNDERGROUND",
    note,
    closed: false,
  };
}
