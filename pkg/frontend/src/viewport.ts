// Screen <-> image mapping for the linked canvases.
//
// screen = image * scale + offset, with scale restricted to powers of two
// and offsets kept integer. Under those constraints every step below is an
// exact IEEE operation for image coordinates of click magnitude, so markers
// stay anchored: imageToScreen then screenToImage returns the input bit for
// bit at any integer zoom.

import type { Point } from "./types.js";

export interface Viewport {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export const MIN_SCALE = 0.25;
export const MAX_SCALE = 16;

export function identityViewport(): Viewport {
  return { scale: 1, offsetX: 0, offsetY: 0 };
}

export function imageToScreen(v: Viewport, p: Point): Point {
  return [p[0] * v.scale + v.offsetX, p[1] * v.scale + v.offsetY];
}

export function screenToImage(v: Viewport, p: Point): Point {
  return [(p[0] - v.offsetX) / v.scale, (p[1] - v.offsetY) / v.scale];
}

export function panBy(v: Viewport, dx: number, dy: number): Viewport {
  return {
    scale: v.scale,
    offsetX: v.offsetX + Math.round(dx),
    offsetY: v.offsetY + Math.round(dy),
  };
}

/**
 * Double or halve the scale, keeping the image point under `anchor` (a
 * screen position) where it is. The new offset is rounded to keep the
 * integer-offset invariant; the anchor may therefore move by under a pixel.
 */
export function zoomStep(v: Viewport, direction: 1 | -1, anchor: Point): Viewport {
  const scale = direction === 1 ? v.scale * 2 : v.scale / 2;
  if (scale < MIN_SCALE || scale > MAX_SCALE) return v;
  const image = screenToImage(v, anchor);
  return {
    scale,
    offsetX: Math.round(anchor[0] - image[0] * scale),
    offsetY: Math.round(anchor[1] - image[1] * scale),
  };
}

/** Snap a click to the center of the image pixel it landed in, which is the
 *  coordinate convention the fitting side uses for GCPs. */
export function snapToPixelCenter(p: Point): Point {
  return [Math.floor(p[0]) + 0.5, Math.floor(p[1]) + 0.5];
}
