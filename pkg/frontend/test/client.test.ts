import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { SessionClient } from "../src/client";
import { ENCODING_COUNTS, ENCODING_MASK, ExportMsg, VolumeFrame } from "../src/protocol";
import { MockSessionServer, nodeSocketFactory, sleep, waitFor } from "./mockServer";

const IDENTITY = [1, 0, 0, 0];

let server: MockSessionServer;
let client: SessionClient;

async function quiesce(): Promise<void> {
  // Trailing throttled sends land within one interval; then the client
  // must have seen the status for the server's final revision.
  let moves = -1;
  while (moves !== server.moveTimestamps.length) {
    moves = server.moveTimestamps.length;
    await sleep(80);
  }
  await waitFor(() => client.hud.revision === server.revision);
}

beforeEach(async () => {
  server = new MockSessionServer(400, 7);
  const port = await server.listen();
  client = new SessionClient(`ws://127.0.0.1:${port}`, {
    socketFactory: nodeSocketFactory,
    reconnectDelayMs: 40,
    maxReconnectAttempts: 5,
  });
  client.connect();
  await waitFor(() => client.connected && client.positions !== null && client.latestFrame !== null);
});

afterEach(async () => {
  client.close();
  await server.close();
});

describe("handshake", () => {
  it("delivers hello state, the point blob, and an initial frame", () => {
    expect(client.hud.revision).toBe(0);
    expect(client.hud.coverage).toBe(0);
    expect(client.hud.mode).toBe("quality");
    expect(client.positions!.length).toBe(400 * 3);
    expect([...client.positions!]).toEqual([...server.positions]);
    expect(client.latestFrame!.encoding).toBe(ENCODING_COUNTS);
    expect(client.latestFrame!.nPoints).toBe(400);
  });
});

describe("scripted drag session", () => {
  it("100 throttled drags: 1..100 frames, increasing revisions, coverage matches export", async () => {
    client.addCamera([0, 0, 2], { quaternion: IDENTITY });
    await waitFor(() => client.hud.revision === 1);

    const frames: VolumeFrame[] = [];
    client.on("frame", (f) => frames.push(f));

    const lastPos: number[] = [0, 0, 0];
    for (let i = 0; i < 100; i++) {
      lastPos[0] = -8 + (16 * i) / 99;
      lastPos[1] = Math.sin(i / 7) * 5;
      lastPos[2] = 2;
      client.dragCamera(0, lastPos, IDENTITY);
      await sleep(2);
    }
    await quiesce();

    // The wire saw far fewer messages than the UI produced, all throttled.
    const stamps = server.moveTimestamps;
    expect(stamps.length).toBeGreaterThanOrEqual(1);
    expect(stamps.length).toBeLessThan(100);
    for (let i = 1; i < stamps.length; i++) {
      expect(stamps[i] - stamps[i - 1]).toBeGreaterThanOrEqual(25);
    }

    // One volume frame per committed move, revisions strictly increasing.
    expect(frames.length).toBeGreaterThanOrEqual(1);
    expect(frames.length).toBeLessThanOrEqual(100);
    expect(frames.length).toBe(stamps.length);
    for (let i = 1; i < frames.length; i++) {
      expect(frames[i].revision).toBeGreaterThan(frames[i - 1].revision);
    }

    // The newest drag always wins: the acknowledged pose is the last one.
    expect(client.localPoses.size).toBe(0);
    expect(client.displayedPose(0)!.position).toEqual(lastPos);
    expect(client.hud.latencyMs).toBe(1.5);

    // HUD coverage is the server's number, exactly, at the same revision.
    const exported = await new Promise<ExportMsg>((resolve) => {
      client.on("export", resolve);
      client.requestExport();
    });
    expect(exported.solution.revision).toBe(client.hud.revision);
    expect(exported.solution.coverage).toBe(client.hud.coverage);
    expect(client.coverageAt(exported.solution.revision)).toBe(exported.solution.coverage);
    expect(exported.solution.coverage).toBe(server.coverage());
    expect(exported.solution.coverage).toBeGreaterThan(0);
  });
});

describe("reconnect", () => {
  it("snaps optimistic poses back to acknowledged server state", async () => {
    client.addCamera([1, 1, 2], { quaternion: IDENTITY });
    await waitFor(() => client.hud.revision === 1);
    const acked = client.cameras.get(0)!.pose.position.slice();

    const states: string[] = [];
    client.on("connection", (s) => states.push(s));

    // Two quick drags leave the second one pending in the limiter.
    client.dragCamera(0, [9, 9, 2], IDENTITY);
    client.dragCamera(0, [9.5, 9, 2], IDENTITY);
    expect(client.localPoses.has(0)).toBe(true);
    server.dropClients();

    await waitFor(() => states.includes("closed"));
    await waitFor(() => client.connected && client.latestFrame !== null);
    expect(states).toEqual(["closed", "connecting", "open"]);

    // No phantom pose: the gizmo shows whatever the server last committed.
    expect(client.localPoses.size).toBe(0);
    const shown = client.displayedPose(0)!;
    expect(shown.position).toEqual(server.cameras.get(0)!.pose.position);
    // At most the first drag was committed; the pending one never was.
    expect(shown.position).not.toEqual([9.5, 9, 2]);
    expect(acked.length).toBe(3);
    expect(client.hud.coverage).toBe(server.coverage());
  });
});

describe("transfer mode", () => {
  it("toggling modes moves no cameras and bumps no revision", async () => {
    client.addCamera([0, 0, 2], { quaternion: IDENTITY });
    await waitFor(() => client.hud.revision === 1);
    const before = server.receivedTypes.length;

    client.setMode("uncovered_only");
    await waitFor(() => client.hud.mode === "uncovered_only");
    await waitFor(() => client.latestFrame!.encoding === ENCODING_MASK);
    expect(client.latestFrame!.revision).toBe(1);

    client.setMode("quality");
    await waitFor(() => client.latestFrame!.encoding === ENCODING_COUNTS);
    expect(client.latestFrame!.revision).toBe(1);
    expect(client.hud.revision).toBe(1);

    expect(server.receivedTypes.slice(before)).toEqual(["set_mode", "set_mode"]);
    expect(server.revision).toBe(1);
  });
});

describe("errors", () => {
  it("reach the issuer and leave session state untouched", async () => {
    const errors: string[] = [];
    client.on("error", (m) => errors.push(m));
    client.removeCamera(99);
    await waitFor(() => errors.length === 1);
    expect(errors[0]).toMatch(/unknown camera/);
    expect(client.hud.revision).toBe(0);
    expect(server.revision).toBe(0);
    expect(client.connected).toBe(true);
  });
});
