// Change-map class toggles. The server renders one change.png with every
// class in its legend color; hiding a class means blanking exactly the
// pixels carrying that color. Operating on raw RGBA buffers keeps this
// testable without a DOM.

import type { LegendEntry } from "./types.js";

export type ClassName = "LOST" | "PERSISTENT" | "NEW" | "UNDERGROUND";

export const CLASS_NAMES: ClassName[] = [
  "LOST",
  "PERSISTENT",
  "NEW",
  "UNDERGROUND",
];

export type ClassVisibility = Record<ClassName, boolean>;

export function allVisible(): ClassVisibility {
  return { LOST: true, PERSISTENT: true, NEW: true, UNDERGROUND: true };
}

export function toggleClass(
  visibility: ClassVisibility,
  name: ClassName,
): ClassVisibility {
  return { ...visibility, [name]: !visibility[name] };
}

/**
 * Return a copy of `rgba` with every pixel whose color matches a hidden
 * class's legend color set fully transparent. Pixels that match no legend
 * entry (the NONE background is already transparent) pass through untouched.
 */
export function filterClasses(
  rgba: Uint8ClampedArray,
  legend: Record<string, LegendEntry>,
  visibility: ClassVisibility,
): Uint8ClampedArray {
  const out = new Uint8ClampedArray(rgba);
  const hidden = CLASS_NAMES.filter((name) => !visibility[name]).map(
    (name) => legend[name]?.color,
  );
  if (hidden.length === 0) return out;
  for (let i = 0; i < out.length; i += 4) {
    for (const color of hidden) {
      if (
        color &&
        out[i] === color[0] &&
        out[i + 1] === color[1] &&
        out[i + 2] === color[2] &&
        out[i + 3] === color[3]
      ) {
        out[i] = out[i + 1] = out[i + 2] = out[i + 3] = 0;
        break;
      }
    }
  }
  return out;
}

export function cssColor(entry: LegendEntry): string {
  const [r, g, b, a] = entry.color;
  return `rgba(${r}, ${g}, ${b}, ${(a / 255).toFixed(3)})`;
}
