import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { SessionClient } from "../src/client";
import { colorize } from "../src/color";
import { ENCODING_COUNTS, ENCODING_MASK, VolumeFrame, uncoveredMask } from "../src/protocol";
import { MockSessionServer, nodeSocketFactory, waitFor } from "./mockServer";

const IDENTITY = [1, 0, 0, 0];

let server: MockSessionServer;
let client: SessionClient;

beforeEach(async () => {
  server = new MockSessionServer(600, 42);
  const port = await server.listen();
  client = new SessionClient(`ws://127.0.0.1:${port}`, { socketFactory: nodeSocketFactory });
  client.connect();
  await waitFor(() => client.connected && client.latestFrame !== null);
});

afterEach(async () => {
  client.close();
  await server.close();
});

describe("two-view parity", () => {
  it("uncovered_only equals counts == 0 for every frame of a recorded session", async () => {
    const recorded: VolumeFrame[] = [client.latestFrame!];
    client.on("frame", (f) => recorded.push(f));

    // Record a session where every committed revision is observed under
    // both encodings: commit in quality mode, flip to uncovered_only and
    // back so the same revision streams as counts and as mask.
    const edits: Array<() => void> = [
      () => client.addCamera([-5, -5, 2], { quaternion: IDENTITY }),
      () => client.addCamera([5, 5, 2], { quaternion: IDENTITY }),
      () => client.dragCamera(0, [-2, -6, 1], IDENTITY),
      () => client.addCamera([0, 0, 3], { quaternion: IDENTITY }),
      () => client.dragCamera(2, [7, -7, 2], IDENTITY),
      () => client.dragCamera(1, [5, 8, 2], IDENTITY),
      () => client.removeCamera(2),
      () => client.dragCamera(0, [-8, 3, 2], IDENTITY),
    ];
    let expectFrames = 1;
    for (const edit of edits) {
      edit();
      expectFrames += 1;
      await waitFor(() => recorded.length === expectFrames);
      for (const mode of ["uncovered_only", "quality"] as const) {
        client.setMode(mode);
        expectFrames += 1;
        await waitFor(() => recorded.length === expectFrames);
      }
    }

    // Every revision shown during the session has a counts view; every
    // mask frame must agree with it bit for bit, all the way to the RGB
    // buffer the renderer would upload.
    const countsByRevision = new Map<number, VolumeFrame>();
    for (const frame of recorded) {
      if (frame.encoding === ENCODING_COUNTS) countsByRevision.set(frame.revision, frame);
    }
    let maskFrames = 0;
    const uncoveredSeen = new Set<number>();
    const mismatches: string[] = [];
    for (const frame of recorded) {
      if (frame.encoding !== ENCODING_MASK) continue;
      maskFrames += 1;
      const reference = countsByRevision.get(frame.revision);
      expect(reference).toBeDefined();
      const fromCounts = uncoveredMask(reference!);
      const fromMask = uncoveredMask(frame);
      expect(fromMask.length).toBe(fromCounts.length);
      for (let i = 0; i < fromMask.length; i++) {
        if (fromMask[i] !== fromCounts[i]) {
          mismatches.push(
            `revision ${frame.revision}, point ${i}: mask ${fromMask[i]} vs count ${reference!.counts![i]}`,
          );
        }
        if (fromMask[i]) uncoveredSeen.add(frame.revision);
      }
      expect(colorize(frame, "uncovered_only")).toEqual(colorize(reference!, "uncovered_only"));
    }
    expect(mismatches).toEqual([]);

    expect(maskFrames).toBe(edits.length);
    expect(new Set(recorded.map((f) => f.revision)).size).toBe(edits.length + 1);
    // The session must exercise non-trivial masks: revisions with both
    // uncovered points and covered points.
    expect(uncoveredSeen.size).toBeGreaterThanOrEqual(3);
    const finalCoverage = server.coverage();
    expect(finalCoverage).toBeGreaterThan(0);
    expect(finalCoverage).toBeLessThan(1);
  });
});
