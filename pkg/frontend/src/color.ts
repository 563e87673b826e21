// Point-cloud coloring from a volume frame. Pure functions so the render
// loop and the tests share one code path.

import { ENCODING_COUNTS, VolumeFrame, maxCount, uncoveredMask } from "./protocol";

export type TransferMode = "quality" | "uncovered_only";

// Cold-to-hot ramp endpoints for the quality view.
const LOW = [0.12, 0.16, 0.55];
const MID = [0.1, 0.75, 0.45];
const HIGH = [0.95, 0.85, 0.15];
const UNCOVERED = [0.9, 0.15, 0.1];
const COVERED_DIM = [0.25, 0.28, 0.32];

function ramp(t: number, out: Float32Array, offset: number): void {
  if (t < 0.5) {
    const u = t * 2;
    out[offset] = LOW[0] + (MID[0] - LOW[0]) * u;
    out[offset + 1] = LOW[1] + (MID[1] - LOW[1]) * u;
    out[offset + 2] = LOW[2] + (MID[2] - LOW[2]) * u;
  } else {
    const u = (t - 0.5) * 2;
    out[offset] = MID[0] + (HIGH[0] - MID[0]) * u;
    out[offset + 1] = MID[1] + (HIGH[1] - MID[1]) * u;
    out[offset + 2] = MID[2] + (HIGH[2] - MID[2]) * u;
  }
}

/**
 * RGB triples for every point of the frame under the given view mode.
 *
 * quality: color ramp over counts 0..max (uncovered points stay at the
 * cold end). uncovered_only: uncovered points in warning red, covered
 * points dimmed, whatever the frame encoding is.
 */
export function colorize(
  frame: VolumeFrame,
  mode: TransferMode,
  out?: Float32Array,
): Float32Array {
  const n = frame.nPoints;
  const colors = out && out.length === n * 3 ? out : new Float32Array(n * 3);
  if (mode === "quality" && frame.encoding === ENCODING_COUNTS) {
    const counts = frame.counts!;
    const max = Math.max(1, maxCount(frame));
    for (let i = 0; i < n; i++) {
      ramp(counts[i] / max, colors, i * 3);
    }
    return colors;
  }
  const mask = uncoveredMask(frame);
  for (let i = 0; i < n; i++) {
    const src = mask[i] ? UNCOVERED : COVERED_DIM;
    colors[i * 3] = src[0];
    colors[i * 3 + 1] = src[1];
    colors[i * 3 + 2] = src[2];
  }
  return colors;
}
