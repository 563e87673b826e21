// Wire types and binary codecs for the session websocket protocol.
//
// Text frames are JSON control messages. Binary frames are either the
// one-off point blob (float32 xyz triples, announced by a "points" header
// message) or volume frames: a 13-byte little-endian header (revision u64,
// n_points u32, encoding u8) followed by the payload. Encoding 0 carries
// uint16 per-point camera counts, encoding 1 a bit-packed uncovered mask
// in little bit order.

export const ENCODING_COUNTS = 0;
export const ENCODING_MASK = 1;
const FRAME_HEADER_BYTES = 13;

export interface CameraSpecMsg {
  perspective_angle: number;
  resolution: [number, number];
  min_range: number;
  max_range: number;
}

export interface PoseMsg {
  position: [number, number, number];
  quaternion: [number, number, number, number];
}

export interface CameraMsg {
  id: number;
  spec: CameraSpecMsg;
  pose: PoseMsg;
}

export interface HelloMsg {
  type: "hello";
  session: string;
  revision: number;
  n_points: number;
  coverage: number;
  mode: string;
  cameras: CameraMsg[];
}

export interface StatusMsg {
  type: "status";
  revision: number;
  camera_id: number;
  changed_points: number;
  duration_ms: number;
  coverage: number;
  cameras: CameraMsg[];
}

export interface ModeMsg {
  type: "mode";
  mode: string;
  revision: number;
}

export interface SolutionRecord {
  format: string;
  version: number;
  session: string;
  revision: number;
  coverage: number;
  cameras: CameraMsg[];
}

export interface ExportMsg {
  type: "export";
  solution: SolutionRecord;
}

export interface ErrorMsg {
  type: "error";
  message: string;
}

export interface PointsHeaderMsg {
  type: "points";
  count: number;
}

export type ServerMsg =
  | HelloMsg
  | StatusMsg
  | ModeMsg
  | ExportMsg
  | ErrorMsg
  | PointsHeaderMsg;

export interface VolumeFrame {
  revision: number;
  nPoints: number;
  encoding: number;
  /** Per-point camera counts; present when encoding is ENCODING_COUNTS. */
  counts?: Uint16Array;
  /** 1 where uncovered; present when encoding is ENCODING_MASK. */
  mask?: Uint8Array;
}

export function decodeVolumeFrame(buf: ArrayBuffer): VolumeFrame {
  if (buf.byteLength < FRAME_HEADER_BYTES) {
    throw new Error(`volume frame too short: ${buf.byteLength} bytes`);
  }
  const view = new DataView(buf);
  const revision = Number(view.getBigUint64(0, true));
  const nPoints = view.getUint32(8, true);
  const encoding = view.getUint8(12);
  if (encoding === ENCODING_COUNTS) {
    if (buf.byteLength < FRAME_HEADER_BYTES + 2 * nPoints) {
      throw new Error("counts payload truncated");
    }
    // The payload starts on an odd byte offset, so copy before viewing.
    const counts = new Uint16Array(
      buf.slice(FRAME_HEADER_BYTES, FRAME_HEADER_BYTES + 2 * nPoints),
    );
    return { revision, nPoints, encoding, counts };
  }
  if (encoding === ENCODING_MASK) {
    const nBytes = Math.ceil(nPoints / 8);
    if (buf.byteLength < FRAME_HEADER_BYTES + nBytes) {
      throw new Error("mask payload truncated");
    }
    const packed = new Uint8Array(buf, FRAME_HEADER_BYTES, nBytes);
    const mask = new Uint8Array(nPoints);
    for (let i = 0; i < nPoints; i++) {
      mask[i] = (packed[i >> 3] >> (i & 7)) & 1;
    }
    return { revision, nPoints, encoding, mask };
  }
  throw new Error(`unknown volume frame encoding ${encoding}`);
}

/** Point positions as sent once after the "points" header. */
export function decodePointBlob(buf: ArrayBuffer): Float32Array {
  if (buf.byteLength % 12 !== 0) {
    throw new Error(`point blob length ${buf.byteLength} is not xyz triples`);
  }
  return new Float32Array(buf.slice(0));
}

/**
 * Uncovered mask of a frame regardless of its encoding: the mask payload
 * verbatim, or counts compared against zero. This is the only derivation
 * the client ever does; counts themselves always come from the server.
 */
export function uncoveredMask(frame: VolumeFrame): Uint8Array {
  if (frame.encoding === ENCODING_MASK) {
    return frame.mask!;
  }
  const counts = frame.counts!;
  const mask = new Uint8Array(frame.nPoints);
  for (let i = 0; i < frame.nPoints; i++) {
    mask[i] = counts[i] === 0 ? 1 : 0;
  }
  return mask;
}

export function maxCount(frame: VolumeFrame): number {
  if (frame.encoding !== ENCODING_COUNTS) return 1;
  let max = 0;
  const counts = frame.counts!;
  for (let i = 0; i < counts.length; i++) {
    if (counts[i] > max) max = counts[i];
  }
  return max;
}
