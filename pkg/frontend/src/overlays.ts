/**
 * Overlay compositor. Pure pixel work on typed arrays so it runs identically
 * under tests and in a canvas; the caller blits the returned RGBA buffer via
 * `putImageData` (or inspects it directly).
 *
 * Layer semantics are fixed: the B-mode frame is the grayscale base,
 * attention blends a warm ramp with opacity proportional to value (so an
 * empty heatmap contributes nothing), confidence blends a cool ramp,
 * the selected candidate gets a single high-contrast contour, and the
 * marker layer draws the confidence-centroid column against the image
 * centerline. Their pixel separation is the lateral servo error divided
 * by the pixel pitch.
 */

import type { TickPayload } from "./protocol.js";

export interface TickView {
  payload: TickPayload;
  widthPx: number;
  depthPx: number;
  pixelPitchMm: number;
  frame: Uint8Array; // row-major u8 planes, depth rows by width cols
  confidence: Uint8Array;
  attention: Uint8Array;
  selectedMask: Uint8Array;
}

export interface LayerToggles {
  bmode: boolean;
  attention: boolean;
  confidence: boolean;
  selection: boolean;
  markers: boolean;
}

export const ALL_LAYERS: LayerToggles = {
  bmode: true,
  attention: true,
  confidence: true,
  selection: true,
  markers: true,
};

export interface MarkerInfo {
  /** Confidence-centroid column, fractional pixels. */
  xcCol: number;
  /** Image centerline column, fractional pixels. */
  centerCol: number;
  /** Signed separation in pixels; equals lateral offset / pixel pitch. */
  separationPx: number;
}

export interface Composite {
  rgba: Uint8ClampedArray; // widthPx * depthPx * 4
  widthPx: number;
  depthPx: number;
  markers: MarkerInfo | null;
}

const ATTENTION_ALPHA = 0.6;
const CONFIDENCE_ALPHA = 0.35;
const SELECTION_RGB: readonly [number, number, number] = [255, 0, 255];
const XC_RGB: readonly [number, number, number] = [255, 165, 0];
const CENTER_RGB: readonly [number, number, number] = [230, 230, 230];

/** Black to red to yellow ramp for attention values in [0,1]. */
export function warmColor(v: number): [number, number, number] {
  return [ramp(3 * v), ramp(3 * v - 1), ramp(3 * v - 2)];
}

/** Deep blue to cyan ramp for confidence values in [0,1]. */
export function coolColor(v: number): [number, number, number] {
  return [0, 255 * v, 255 * (0.5 + 0.5 * v)];
}

function ramp(v: number): number {
  return 255 * Math.min(1, Math.max(0, v));
}

export function compositeTick(view: TickView, toggles: LayerToggles = ALL_LAYERS): Composite {
  const { widthPx: w, depthPx: h } = view;
  const n = w * h;
  const rgba = new Uint8ClampedArray(n * 4);

  for (let i = 0; i < n; i++) {
    let r = 0;
    let g = 0;
    let b = 0;
    if (toggles.bmode) {
      const base = view.frame[i]!;
      r = g = b = base;
    }
    if (toggles.confidence) {
      const v = view.confidence[i]! / 255;
      const a = CONFIDENCE_ALPHA * v;
      const [cr, cg, cb] = coolColor(v);
      r += (cr - r) * a;
      g += (cg - g) * a;
      b += (cb - b) * a;
    }
    if (toggles.attention) {
      const v = view.attention[i]! / 255;
      const a = ATTENTION_ALPHA * v; // zero value means zero footprint
      const [ar, ag, ab] = warmColor(v);
      r += (ar - r) * a;
      g += (ag - g) * a;
      b += (ab - b) * a;
    }
    const j = i * 4;
    rgba[j] = r;
    rgba[j + 1] = g;
    rgba[j + 2] = b;
    rgba[j + 3] = 255;
  }

  if (toggles.selection) {
    paintContour(rgba, view.selectedMask, w, h);
  }

  let markers: MarkerInfo | null = null;
  if (toggles.markers) {
    markers = markerInfo(view);
    paintColumn(rgba, w, h, Math.round(markers.centerCol), CENTER_RGB, 3);
    paintColumn(rgba, w, h, Math.round(markers.xcCol), XC_RGB, 0);
  }

  return { rgba, widthPx: w, depthPx: h, markers };
}

export function markerInfo(view: TickView): MarkerInfo {
  const xcCol = view.payload.telemetry.x_c_px;
  const centerCol = (view.widthPx - 1) / 2;
  return { xcCol, centerCol, separationPx: xcCol - centerCol };
}

/** Border pixels of the mask: set pixels with a cleared 4-neighbor (or at the image edge). */
function paintContour(rgba: Uint8ClampedArray, mask: Uint8Array, w: number, h: number): void {
  for (let row = 0; row < h; row++) {
    for (let col = 0; col < w; col++) {
      const i = row * w + col;
      if (!mask[i]) continue;
      const edge =
        row === 0 || col === 0 || row === h - 1 || col === w - 1 ||
        !mask[i - 1] || !mask[i + 1] || !mask[i - w] || !mask[i + w];
      if (!edge) continue;
      const j = i * 4;
      rgba[j] = SELECTION_RGB[0];
      rgba[j + 1] = SELECTION_RGB[1];
      rgba[j + 2] = SELECTION_RGB[2];
    }
  }
}

function paintColumn(
  rgba: Uint8ClampedArray,
  w: number,
  h: number,
  col: number,
  color: readonly [number, number, number],
  dash: number,
): void {
  if (col < 0 || col >= w) return;
  for (let row = 0; row < h; row++) {
    if (dash > 0 && row % (2 * dash) >= dash) continue;
    const j = (row * w + col) * 4;
    rgba[j] = color[0];
    rgba[j + 1] = color[1];
    rgba[j + 2] = color[2];
  }
}
