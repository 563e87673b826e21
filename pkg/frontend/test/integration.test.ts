// End-to-end against the real session service. Skipped when the `camnet`
// entry point is not on PATH (frontend-only checkouts).

import { ChildProcess, spawn, spawnSync } from "node:child_process";
import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { SessionClient } from "../src/client";
import {
  ENCODING_COUNTS,
  ENCODING_MASK,
  ExportMsg,
  HelloMsg,
  VolumeFrame,
  uncoveredMask,
} from "../src/protocol";
import { nodeSocketFactory, sleep, waitFor } from "./mockServer";

const SCENARIO = `
scene: {builtin: cube}
camera:
  perspective_angle: 90.0
  resolution: [320, 200]
  min_range: 0.2
  max_range: 60.0
roi_boxes:
  - {center: [0, 0, 1.5], half_extents: [0.75, 0.75, 0.4], resolution: [8, 8, 4]}
points:
  - {kind: roi_voxels, box: 0}
candidates:
  kind: segments
  segments: [[[-3, -3, 3], [3, -3, 3]]]
  positions_per_segment: 4
optimizer: {method: lazy_greedy, k: 2}
`;

const hasCamnet = spawnSync("camnet", ["--help"], { stdio: "ignore" }).status === 0;

describe.runIf(hasCamnet)("live service", () => {
  const port = 18400 + (process.pid % 1000);
  const workDir = mkdtempSync(join(tmpdir(), "studio-e2e-"));
  const exportDir = join(workDir, "flushed");
  let proc: ChildProcess;
  let client: SessionClient;
  let hello: HelloMsg | null = null;
  const frames: VolumeFrame[] = [];

  beforeAll(async () => {
    const cfg = join(workDir, "scenario.yaml");
    writeFileSync(cfg, SCENARIO);
    proc = spawn("camnet", ["serve", "-c", cfg, "--port", String(port), "--export-dir", exportDir], {
      stdio: "ignore",
    });
    const deadline = Date.now() + 90_000;
    for (;;) {
      try {
        const res = await fetch(`http://127.0.0.1:${port}/healthz`);
        if (res.ok) break;
      } catch {
        // not up yet
      }
      if (Date.now() > deadline) throw new Error("camnet serve did not come up");
      await sleep(250);
    }
    client = new SessionClient(`ws://127.0.0.1:${port}/ws`, {
      socketFactory: nodeSocketFactory,
      maxReconnectAttempts: 0,
    });
    client.on("hello", (msg) => {
      hello = msg;
    });
    client.on("frame", (f) => frames.push(f));
    client.connect();
    await waitFor(() => client.connected && client.positions !== null && frames.length > 0, 30_000);
  }, 120_000);

  afterAll(async () => {
    client?.close();
    // A child killed by signal keeps exitCode null; check both fields.
    if (proc && proc.exitCode === null && proc.signalCode === null) {
      const done = new Promise((resolve) => proc.once("exit", resolve));
      proc.kill("SIGTERM");
      await done;
    }
  });

  it("handshake carries the whole session state", () => {
    expect(hello!.n_points).toBeGreaterThan(0);
    expect(client.positions!.length).toBe(hello!.n_points * 3);
    expect(hello!.mode).toBe("quality");
    expect(frames[0].revision).toBe(0);
    expect(frames[0].encoding).toBe(ENCODING_COUNTS);
  });

  it("runs a throttled 100-drag session with exact coverage attribution", async () => {
    client.addCamera([3, 3, 3], { lookAt: [0, 0, 1.5] });
    await waitFor(() => client.hud.revision >= 1, 30_000);
    const baseline = frames.length;

    for (let i = 0; i < 100; i++) {
      client.dragCamera(0, [-3 + (6 * i) / 99, -3, 3], [1, 0, 0, 0]);
      await sleep(2);
    }
    // Coalescing stops once no further commits arrive for a while.
    let rev = -1;
    while (rev !== client.hud.revision) {
      rev = client.hud.revision;
      await sleep(400);
    }
    await waitFor(() => client.localPoses.size === 0, 10_000);

    const dragFrames = frames.slice(baseline);
    expect(dragFrames.length).toBeGreaterThanOrEqual(1);
    expect(dragFrames.length).toBeLessThanOrEqual(100);
    for (let i = 1; i < dragFrames.length; i++) {
      expect(dragFrames[i].revision).toBeGreaterThan(dragFrames[i - 1].revision);
    }

    const exported = await new Promise<ExportMsg>((resolve) => {
      client.on("export", resolve);
      client.requestExport();
    });
    expect(exported.solution.revision).toBe(client.hud.revision);
    expect(exported.solution.coverage).toBe(client.hud.coverage);
    expect(client.coverageAt(exported.solution.revision)).toBe(exported.solution.coverage);
  }, 120_000);

  it("uncovered_only frames agree with the counts view at the same revision", async () => {
    const countsFrame = client.latestFrame!;
    expect(countsFrame.encoding).toBe(ENCODING_COUNTS);

    client.setMode("uncovered_only");
    await waitFor(() => client.latestFrame!.encoding === ENCODING_MASK, 15_000);
    const maskFrame = client.latestFrame!;
    expect(maskFrame.revision).toBe(countsFrame.revision);
    expect([...uncoveredMask(maskFrame)]).toEqual([...uncoveredMask(countsFrame)]);

    client.setMode("quality");
    await waitFor(() => client.latestFrame!.encoding === ENCODING_COUNTS, 15_000);
  }, 60_000);

  it("SIGTERM flushes a session export at the displayed revision", async () => {
    const revision = client.hud.revision;
    const session = hello!.session;
    const done = new Promise((resolve) => proc.once("exit", resolve));
    proc.kill("SIGTERM");
    await done;
    const path = join(exportDir, `${session}-solution.json`);
    expect(existsSync(path)).toBe(true);
    const record = JSON.parse(readFileSync(path, "utf-8"));
    expect(record.format).toBe("camnet-solution");
    expect(record.revision).toBe(revision);
  }, 60_000);
});
