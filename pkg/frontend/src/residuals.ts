// Residual table model: sorting, outlier display, and the fit button's
// precondition surface. Pure functions so the table is trivially testable.

import type { ResidualRow, TransformKind } from "./types.js";

export const MIN_GCPS: Record<TransformKind, number> = {
  projective: 4,
  polynomial2: 6,
};

export type SortKey = "id" | "residual" | "outlier";

export function sortRows(
  rows: ResidualRow[],
  key: SortKey,
  descending = false,
): ResidualRow[] {
  const sorted = [...rows].sort((a, b) => {
    switch (key) {
      case "id":
        return a.id < b.id ? -1 : a.id > b.id ? 1 : 0;
      case "residual":
        return a.residual_px - b.residual_px;
      case "outlier":
        return Number(a.outlier) - Number(b.outlier);
    }
  });
  return descending ? sorted.reverse() : sorted;
}

export interface FitButtonState {
  disabled: boolean;
  tooltip: string | null;
}

/** Disabled below the server's minimum for the kind, with the minimum shown. */
export function fitButtonState(
  kind: TransformKind,
  enabledCount: number,
): FitButtonState {
  const minimum = MIN_GCPS[kind];
  if (enabledCount < minimum) {
    return { disabled: true, tooltip: `needs ≥ ${minimum}` };
  }
  return { disabled: false, tooltip: null };
}

export function formatResidual(px: number | null): string {
  return px === null ? "—" : `${px.toFixed(2)} px`;
}
