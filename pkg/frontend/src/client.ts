// Session websocket client: handshake, command sending, reconnect.
//
// The client never computes visibility or coverage. Counts arrive in
// volume frames, coverage arrives in hello/status messages, and the HUD
// only ever displays those server values, keyed by revision.

import {
  CameraMsg,
  CameraSpecMsg,
  ExportMsg,
  HelloMsg,
  ModeMsg,
  PoseMsg,
  ServerMsg,
  StatusMsg,
  VolumeFrame,
  decodePointBlob,
  decodeVolumeFrame,
} from "./protocol";
import { RateLimiter } from "./throttle";

export interface SocketLike {
  binaryType: string;
  readyState: number;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  send(data: string): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export type ConnectionState = "connecting" | "open" | "closed";

export interface HudState {
  revision: number;
  coverage: number;
  cameraCount: number;
  latencyMs: number;
  mode: string;
  connection: ConnectionState;
}

export interface ClientEvents {
  hello: (msg: HelloMsg) => void;
  points: (positions: Float32Array) => void;
  frame: (frame: VolumeFrame) => void;
  status: (msg: StatusMsg) => void;
  mode: (msg: ModeMsg) => void;
  export: (msg: ExportMsg) => void;
  error: (message: string) => void;
  connection: (state: ConnectionState) => void;
}

export interface ClientOptions {
  socketFactory?: SocketFactory;
  maxMessagesPerSecond?: number;
  reconnectDelayMs?: number;
  maxReconnectAttempts?: number;
}

const LATENCY_WINDOW = 32;
const COVERAGE_HISTORY = 512;

export class SessionClient {
  readonly url: string;
  readonly hud: HudState = {
    revision: 0,
    coverage: 0,
    cameraCount: 0,
    latencyMs: 0,
    mode: "quality",
    connection: "closed",
  };

  /** Last server-acknowledged camera list, by id. */
  readonly cameras = new Map<number, CameraMsg>();
  /** Optimistic poses applied locally while a drag is in flight. */
  readonly localPoses = new Map<number, PoseMsg>();

  positions: Float32Array | null = null;
  latestFrame: VolumeFrame | null = null;

  private readonly factory: SocketFactory;
  private readonly reconnectDelayMs: number;
  private readonly maxReconnectAttempts: number;
  private readonly limiters = new Map<number, RateLimiter>();
  private readonly maxPerSecond: number;
  private readonly handlers = new Map<keyof ClientEvents, Set<Function>>();
  private readonly coverageByRevision = new Map<number, number>();
  private readonly latencySamples: number[] = [];

  private socket: SocketLike | null = null;
  private phase: "hello" | "header" | "blob" | "stream" = "hello";
  private expectedPoints = 0;
  private reconnectAttempts = 0;
  private closedByUser = false;

  constructor(url: string, options: ClientOptions = {}) {
    this.url = url;
    this.factory = options.socketFactory ?? ((u) => new WebSocket(u) as unknown as SocketLike);
    this.maxPerSecond = options.maxMessagesPerSecond ?? 30;
    this.reconnectDelayMs = options.reconnectDelayMs ?? 1000;
    this.maxReconnectAttempts = options.maxReconnectAttempts ?? 10;
  }

  on<K extends keyof ClientEvents>(event: K, handler: ClientEvents[K]): void {
    let set = this.handlers.get(event);
    if (!set) {
      set = new Set();
      this.handlers.set(event, set);
    }
    set.add(handler);
  }

  private emit<K extends keyof ClientEvents>(
    event: K,
    ...args: Parameters<ClientEvents[K]>
  ): void {
    const set = this.handlers.get(event);
    if (!set) return;
    for (const h of set) {
      try {
        (h as (...a: unknown[]) => void)(...args);
      } catch (e) {
        console.warn("handler failed", e);
      }
    }
  }

  connect(): void {
    this.closedByUser = false;
    this.phase = "hello";
    this.setConnection("connecting");
    const socket = this.factory(this.url);
    socket.binaryType = "arraybuffer";
    this.socket = socket;

    socket.onopen = () => {
      this.reconnectAttempts = 0;
      socket.send(JSON.stringify({ type: "hello" }));
    };
    socket.onmessage = (ev) => this.handleMessage(ev.data);
    socket.onerror = () => {
      // onclose follows; nothing to do here.
    };
    socket.onclose = () => {
      this.socket = null;
      for (const limiter of this.limiters.values()) limiter.cancel();
      this.setConnection("closed");
      if (this.closedByUser) return;
      if (this.reconnectAttempts >= this.maxReconnectAttempts) {
        console.log("giving up after", this.reconnectAttempts, "reconnect attempts");
        return;
      }
      this.reconnectAttempts++;
      console.log("socket closed, reconnecting...");
      // Unacknowledged drags are void now; gizmos snap back on reconnect.
      this.localPoses.clear();
      setTimeout(() => {
        if (!this.closedByUser) this.connect();
      }, this.reconnectDelayMs);
    };
  }

  close(): void {
    this.closedByUser = true;
    for (const limiter of this.limiters.values()) limiter.cancel();
    this.socket?.close();
    this.socket = null;
  }

  get connected(): boolean {
    return this.hud.connection === "open";
  }

  /** Server coverage recorded for a revision, for HUD attribution. */
  coverageAt(revision: number): number | undefined {
    return this.coverageByRevision.get(revision);
  }

  /** Pose the gizmo for a camera should show right now. */
  displayedPose(id: number): PoseMsg | undefined {
    return this.localPoses.get(id) ?? this.cameras.get(id)?.pose;
  }

  // ------------------------------------------------------------- commands

  dragCamera(id: number, position: number[], quaternion: number[]): void {
    const pose: PoseMsg = {
      position: [position[0], position[1], position[2]],
      quaternion: [quaternion[0], quaternion[1], quaternion[2], quaternion[3]],
    };
    this.localPoses.set(id, pose);
    let limiter = this.limiters.get(id);
    if (!limiter) {
      limiter = new RateLimiter(this.maxPerSecond);
      this.limiters.set(id, limiter);
    }
    limiter.push(() =>
      this.send({
        type: "move_camera",
        id,
        position: pose.position,
        quaternion: pose.quaternion,
      }),
    );
  }

  addCamera(
    position: number[],
    aim: { lookAt?: number[]; quaternion?: number[] },
    spec?: Partial<CameraSpecMsg>,
  ): void {
    this.send({
      type: "add_camera",
      position,
      look_at: aim.lookAt,
      quaternion: aim.quaternion,
      spec,
    });
  }

  removeCamera(id: number): void {
    this.send({ type: "remove_camera", id });
  }

  setMode(mode: string): void {
    this.send({ type: "set_mode", mode });
  }

  requestExport(): void {
    this.send({ type: "export" });
  }

  requestFrame(): void {
    this.send({ type: "get_frame" });
  }

  private send(msg: Record<string, unknown>): void {
    if (!this.socket) {
      console.warn("dropping message, socket closed:", msg.type);
      return;
    }
    this.socket.send(JSON.stringify(msg));
  }

  // ------------------------------------------------------------- receiving

  private handleMessage(data: unknown): void {
    if (typeof data === "string") {
      this.handleText(JSON.parse(data) as ServerMsg);
      return;
    }
    const buf = this.toArrayBuffer(data);
    if (this.phase === "blob") {
      this.positions = decodePointBlob(buf);
      if (this.positions.length !== this.expectedPoints * 3) {
        this.emit("error", "point blob size does not match header count");
      }
      this.phase = "stream";
      this.emit("points", this.positions);
      return;
    }
    const frame = decodeVolumeFrame(buf);
    this.latestFrame = frame;
    this.hud.revision = frame.revision;
    this.emit("frame", frame);
  }

  private handleText(msg: ServerMsg): void {
    switch (msg.type) {
      case "hello": {
        this.phase = "header";
        this.hud.mode = msg.mode;
        this.recordCoverage(msg.revision, msg.coverage);
        this.applyCameraList(msg.cameras);
        // A fresh handshake acknowledges server state; drop local drags.
        this.localPoses.clear();
        this.setConnection("open");
        this.emit("hello", msg);
        break;
      }
      case "points": {
        this.phase = "blob";
        this.expectedPoints = msg.count;
        break;
      }
      case "status": {
        this.recordCoverage(msg.revision, msg.coverage);
        this.applyCameraList(msg.cameras);
        this.recordLatency(msg.duration_ms);
        // The server acknowledged this camera's newest committed pose.
        this.localPoses.delete(msg.camera_id);
        this.emit("status", msg);
        break;
      }
      case "mode": {
        this.hud.mode = msg.mode;
        this.emit("mode", msg);
        break;
      }
      case "export": {
        this.emit("export", msg);
        break;
      }
      case "error": {
        console.warn("server error:", msg.message);
        this.emit("error", msg.message);
        break;
      }
    }
  }

  private applyCameraList(list: CameraMsg[]): void {
    this.cameras.clear();
    for (const cam of list) this.cameras.set(cam.id, cam);
    this.hud.cameraCount = list.length;
    for (const id of this.localPoses.keys()) {
      if (!this.cameras.has(id)) this.localPoses.delete(id);
    }
  }

  private recordCoverage(revision: number, coverage: number): void {
    this.hud.revision = revision;
    this.hud.coverage = coverage;
    this.coverageByRevision.set(revision, coverage);
    if (this.coverageByRevision.size > COVERAGE_HISTORY) {
      const oldest = this.coverageByRevision.keys().next().value as number;
      this.coverageByRevision.delete(oldest);
    }
  }

  private recordLatency(ms: number): void {
    this.latencySamples.push(ms);
    if (this.latencySamples.length > LATENCY_WINDOW) this.latencySamples.shift();
    let sum = 0;
    for (const v of this.latencySamples) sum += v;
    this.hud.latencyMs = sum / this.latencySamples.length;
  }

  private setConnection(state: ConnectionState): void {
    if (this.hud.connection === state) return;
    this.hud.connection = state;
    this.emit("connection", state);
  }

  private toArrayBuffer(data: unknown): ArrayBuffer {
    if (data instanceof ArrayBuffer) return data;
    if (ArrayBuffer.isView(data)) {
      const view = data as Uint8Array;
      return view.buffer.slice(view.byteOffset, view.byteOffset + view.byteLength) as ArrayBuffer;
    }
    throw new Error("unexpected binary message payload");
  }
}
