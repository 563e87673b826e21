import { describe, expect, it } from "vitest";

import {
  ENCODING_COUNTS,
  ENCODING_MASK,
  decodePointBlob,
  decodeVolumeFrame,
  maxCount,
  uncoveredMask,
} from "../src/protocol";

function countsFrame(revision: number, counts: number[]): ArrayBuffer {
  const buf = new ArrayBuffer(13 + 2 * counts.length);
  const view = new DataView(buf);
  view.setBigUint64(0, BigInt(revision), true);
  view.setUint32(8, counts.length, true);
  view.setUint8(12, ENCODING_COUNTS);
  counts.forEach((c, i) => view.setUint16(13 + 2 * i, c, true));
  return buf;
}

function maskFrame(revision: number, mask: number[]): ArrayBuffer {
  const nBytes = Math.ceil(mask.length / 8);
  const buf = new ArrayBuffer(13 + nBytes);
  const view = new DataView(buf);
  view.setBigUint64(0, BigInt(revision), true);
  view.setUint32(8, mask.length, true);
  view.setUint8(12, ENCODING_MASK);
  const packed = new Uint8Array(buf, 13);
  mask.forEach((m, i) => {
    if (m) packed[i >> 3] |= 1 << (i & 7);
  });
  return buf;
}

describe("volume frame decoding", () => {
  it("decodes counts frames, including the odd header offset", () => {
    const frame = decodeVolumeFrame(countsFrame(7, [0, 3, 65535, 1]));
    expect(frame.revision).toBe(7);
    expect(frame.nPoints).toBe(4);
    expect(frame.encoding).toBe(ENCODING_COUNTS);
    expect([...frame.counts!]).toEqual([0, 3, 65535, 1]);
  });

  it("decodes packed masks in little bit order", () => {
    const bits = [1, 0, 0, 1, 1, 0, 0, 0, 1, 1, 0];
    const frame = decodeVolumeFrame(maskFrame(123456789, bits));
    expect(frame.revision).toBe(123456789);
    expect(frame.encoding).toBe(ENCODING_MASK);
    expect([...frame.mask!]).toEqual(bits);
  });

  it("survives revisions past 32 bits", () => {
    const frame = decodeVolumeFrame(countsFrame(2 ** 40 + 5, [1]));
    expect(frame.revision).toBe(2 ** 40 + 5);
  });

  it("rejects short buffers, truncated payloads, unknown encodings", () => {
    expect(() => decodeVolumeFrame(new ArrayBuffer(5))).toThrow(/too short/);
    const truncated = countsFrame(1, [1, 2, 3]).slice(0, 15);
    expect(() => decodeVolumeFrame(truncated)).toThrow(/truncated/);
    const bad = countsFrame(1, [1]);
    new DataView(bad).setUint8(12, 9);
    expect(() => decodeVolumeFrame(bad)).toThrow(/encoding 9/);
  });
});

describe("point blob decoding", () => {
  it("reads float32 xyz triples", () => {
    const src = new Float32Array([1, 2, 3, 4.5, -1, 0]);
    const pts = decodePointBlob(src.buffer.slice(0));
    expect([...pts]).toEqual([1, 2, 3, 4.5, -1, 0]);
  });

  it("rejects lengths that are not triples", () => {
    expect(() => decodePointBlob(new ArrayBuffer(10))).toThrow(/triples/);
  });
});

describe("uncovered mask derivation", () => {
  it("matches counts == 0 for counts frames", () => {
    const frame = decodeVolumeFrame(countsFrame(1, [0, 2, 0, 1, 0]));
    expect([...uncoveredMask(frame)]).toEqual([1, 0, 1, 0, 1]);
  });

  it("passes mask frames through verbatim", () => {
    const bits = [0, 1, 1, 0, 1];
    const frame = decodeVolumeFrame(maskFrame(1, bits));
    expect([...uncoveredMask(frame)]).toEqual(bits);
  });

  it("both encodings of one state agree", () => {
    const counts = [0, 1, 0, 4, 2, 0, 0, 9, 1];
    const viaCounts = uncoveredMask(decodeVolumeFrame(countsFrame(3, counts)));
    const viaMask = uncoveredMask(
      decodeVolumeFrame(maskFrame(3, counts.map((c) => (c === 0 ? 1 : 0)))),
    );
    expect([...viaCounts]).toEqual([...viaMask]);
  });
});

describe("maxCount", () => {
  it("finds the ramp ceiling", () => {
    expect(maxCount(decodeVolumeFrame(countsFrame(1, [0, 5, 3])))).toBe(5);
    expect(maxCount(decodeVolumeFrame(countsFrame(1, [0, 0])))).toBe(0);
  });
});
