import { describe, expect, it } from "vitest";

import {
  MIN_GCPS,
  fitButtonState,
  formatResidual,
  sortRows,
} from "../src/residuals.js";
import type { ResidualRow } from "../src/types.js";

function row(id: string, residual: number, outlier = false): ResidualRow {
  return { id, residual_px: residual, enabled: true, outlier, loo_residual_px: null };
}

describe("fitButtonState", () => {
  it("disables the button below the per-kind minimum", () => {
    expect(fitButtonState("polynomial2", 5)).toEqual({
      disabled: true,
      tooltip: "needs ≥ 6",
    });
    expect(fitButtonState("projective", 3)).toEqual({
      disabled: true,
      tooltip: "needs ≥ 4",
    });
  });

  it("enables the button at the minimum", () => {
    expect(fitButtonState("polynomial2", 6).disabled).toBe(false);
    expect(fitButtonState("polynomial2", 6).tooltip).toBeNull();
    expect(fitButtonState("projective", 4).disabled).toBe(false);
  });

  it("counts only enabled points, per the caller's contract", () => {
    // the caller passes the enabled count; sanity-check the constants it uses
    expect(MIN_GCPS.projective).toBe(4);
    expect(MIN_GCPS.polynomial2).toBe(6);
  });
});

describe("sortRows", () => {
  const rows = [row("g2", 0.5), row("g1", 2.5, true), row("g3", 1.0)];

  it("sorts by id without mutating the input", () => {
    const sorted = sortRows(rows, "id", false);
    expect(sorted.map((r) => r.id)).toEqual(["g1", "g2", "g3"]);
    expect(rows.map((r) => r.id)).toEqual(["g2", "g1", "g3"]);
  });

  it("sorts by residual ascending and descending", () => {
    expect(sortRows(rows, "residual", false).map((r) => r.id)).toEqual([
      "g2",
      "g3",
      "g1",
    ]);
    expect(sortRows(rows, "residual", true).map((r) => r.id)).toEqual([
      "g1",
      "g3",
      "g2",
    ]);
  });

  it("groups outliers together when sorting by outlier", () => {
    expect(sortRows(rows, "outlier", false).at(-1)?.id).toBe("g1");
    expect(sortRows(rows, "outlier", true)[0].id).toBe("g1");
  });
});

describe("formatResidual", () => {
  it("renders numbers to two decimals with units", () => {
    expect(formatResidual(1.2345)).toBe("1.23 px");
    expect(formatResidual(0)).toBe("0.00 px");
  });

  it("renders a dash when the value is unavailable", () => {
    expect(formatResidual(null)).toBe("—");
  });
});
