import { describe, expect, it } from "vitest";

import { addVertex, canCommit, commitDraft, emptyDraft } from "../src/annotate.js";

describe("polyline drafting", () => {
  it("builds an UNDERGROUND annotation from three clicked vertices", () => {
    let draft = emptyDraft();
    draft = addVertex(draft, [10.5, 20.5]);
    draft = addVertex(draft, [30.5, 22.5]);
    draft = addVertex(draft, [55.5, 40.5]);

    const dto = commitDraft(draft, "culverted reach");
    expect(dto).toEqual({
      vertices: [
        [10.5, 20.5],
        [30.5, 22.5],
        [55.5, 40.5],
      ],
      status: "UNDERGROUND",
      note: "culverted reach",
      closed: false,
    });
  });

  it("does not mutate earlier drafts when adding vertices", () => {
    const first = addVertex(emptyDraft(), [1, 1]);
    const second = addVertex(first, [2, 2]);
    expect(first.vertices).toHaveLength(1);
    expect(second.vertices).toHaveLength(2);
  });

  it("refuses to commit with fewer than two vertices", () => {
    expect(canCommit(emptyDraft())).toBe(false);
    const one = addVertex(emptyDraft(), [3, 3]);
    expect(canCommit(one)).toBe(false);
    expect(() => commitDraft(one, "")).toThrow(/2 vertices/);

    const two = addVertex(one, [4, 4]);
    expect(canCommit(two)).toBe(true);
  });
});
