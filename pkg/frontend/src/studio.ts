// Three.js view layer: point cloud, camera gizmos, feeds, HUD bindings.
//
// All coverage numbers shown here come from the session client verbatim;
// this layer only turns frames into colors and poses into meshes.

import * as THREE from "three";
import { OrbitControls } from "three/addons/controls/OrbitControls.js";
import { OBJLoader } from "three/addons/loaders/OBJLoader.js";

import { SessionClient } from "./client";
import { TransferMode, colorize } from "./color";
import { CameraMsg, PoseMsg, VolumeFrame } from "./protocol";

const POINT_SIZE = 0.12;
const FEED_WIDTH = 192;

function wireQuatToThree(q: [number, number, number, number]): THREE.Quaternion {
  // Wire order is scalar-first (w, x, y, z); three.js wants (x, y, z, w).
  return new THREE.Quaternion(q[1], q[2], q[3], q[0]);
}

function threeQuatToWire(q: THREE.Quaternion): [number, number, number, number] {
  return [q.w, q.x, q.y, q.z];
}

function verticalFovDeg(spec: CameraMsg["spec"]): number {
  const [w, h] = spec.resolution;
  const tanHalf = Math.tan((spec.perspective_angle * Math.PI) / 360);
  return (2 * Math.atan(tanHalf * (h / w)) * 180) / Math.PI;
}

/** Wireframe frustum plus a body marker for one camera. */
function buildGizmo(cam: CameraMsg, selected: boolean): THREE.Group {
  const group = new THREE.Group();
  group.name = `camera-${cam.id}`;

  const body = new THREE.Mesh(
    new THREE.SphereGeometry(0.25, 12, 8),
    new THREE.MeshBasicMaterial({ color: selected ? 0xffc040 : 0x40a0ff }),
  );
  body.userData.cameraId = cam.id;
  group.add(body);

  const [w, h] = cam.spec.resolution;
  const tanH = Math.tan((cam.spec.perspective_angle * Math.PI) / 360);
  const tanV = tanH * (h / w);
  const verts: number[] = [];
  const addPlane = (d: number) => [
    [-tanH * d, -tanV * d, -d],
    [tanH * d, -tanV * d, -d],
    [tanH * d, tanV * d, -d],
    [-tanH * d, tanV * d, -d],
  ];
  const near = addPlane(cam.spec.min_range);
  const far = addPlane(cam.spec.max_range);
  for (let i = 0; i < 4; i++) {
    const j = (i + 1) % 4;
    verts.push(...near[i], ...near[j]);
    verts.push(...far[i], ...far[j]);
    verts.push(...near[i], ...far[i]);
  }
  const geo = new THREE.BufferGeometry();
  geo.setAttribute("position", new THREE.Float32BufferAttribute(verts, 3));
  const lines = new THREE.LineSegments(
    geo,
    new THREE.LineBasicMaterial({ color: selected ? 0xffc040 : 0x3080d0 }),
  );
  group.add(lines);
  return group;
}

export interface StudioDom {
  container: HTMLElement;
  hudCoverage: HTMLElement;
  hudCameras: HTMLElement;
  hudLatency: HTMLElement;
  hudRevision: HTMLElement;
  banner: HTMLElement;
  modeQuality: HTMLButtonElement;
  modeUncovered: HTMLButtonElement;
  scaleSlider: HTMLInputElement;
  addButton: HTMLButtonElement;
  removeButton: HTMLButtonElement;
  exportButton: HTMLButtonElement;
  feeds: HTMLElement;
}

export class Studio {
  readonly client: SessionClient;
  private readonly dom: StudioDom;
  private readonly renderer: THREE.WebGLRenderer;
  private readonly scene = new THREE.Scene();
  private readonly world = new THREE.Group();
  private readonly viewCamera: THREE.PerspectiveCamera;
  private readonly controls: OrbitControls;
  private readonly gizmos = new Map<number, THREE.Group>();
  private readonly feedRenderers = new Map<number, THREE.WebGLRenderer>();

  private points: THREE.Points | null = null;
  private colorAttr: THREE.BufferAttribute | null = null;
  private viewMode: TransferMode = "quality";
  private selectedCamera: number | null = null;
  private dragging: number | null = null;
  private dragPlane = new THREE.Plane(new THREE.Vector3(0, 0, 1), 0);
  private raycaster = new THREE.Raycaster();

  constructor(client: SessionClient, dom: StudioDom) {
    this.client = client;
    this.dom = dom;

    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setSize(dom.container.clientWidth, dom.container.clientHeight);
    dom.container.appendChild(this.renderer.domElement);

    this.viewCamera = new THREE.PerspectiveCamera(
      55,
      dom.container.clientWidth / dom.container.clientHeight,
      0.1,
      2000,
    );
    this.viewCamera.up.set(0, 0, 1);
    this.viewCamera.position.set(18, -24, 16);
    this.controls = new OrbitControls(this.viewCamera, this.renderer.domElement);

    this.scene.background = new THREE.Color(0x10141a);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(30, -20, 50);
    this.scene.add(sun);
    this.scene.add(this.world);
    this.world.add(new THREE.GridHelper(60, 30, 0x335577, 0x223344).rotateX(Math.PI / 2));

    this.bindClient();
    this.bindDom();
    this.animate();
  }

  private bindClient(): void {
    const client = this.client;
    client.on("points", (positions) => this.buildPointCloud(positions));
    client.on("frame", (frame) => this.applyFrame(frame));
    client.on("status", () => this.syncGizmos());
    client.on("hello", () => this.syncGizmos());
    client.on("connection", (state) => {
      this.dom.banner.textContent =
        state === "open" ? "" : state === "connecting" ? "reconnecting..." : "disconnected";
      this.dom.banner.style.display = state === "open" ? "none" : "block";
      if (state !== "open") this.dragging = null;
      // Snap gizmos back to the last acknowledged poses.
      this.syncGizmos();
    });
    client.on("export", (msg) => {
      const blob = new Blob([JSON.stringify(msg.solution, null, 2)], {
        type: "application/json",
      });
      const a = document.createElement("a");
      a.href = URL.createObjectURL(blob);
      a.download = `${msg.solution.session}-solution.json`;
      a.click();
      URL.revokeObjectURL(a.href);
    });
  }

  private bindDom(): void {
    const dom = this.dom;
    dom.modeQuality.onclick = () => this.setViewMode("quality");
    dom.modeUncovered.onclick = () => this.setViewMode("uncovered_only");
    dom.scaleSlider.oninput = () => {
      const s = Number(dom.scaleSlider.value);
      if (s > 0) this.world.scale.setScalar(s);
    };
    dom.addButton.onclick = () => {
      const t = this.controls.target;
      const p = this.viewCamera.position;
      this.client.addCamera([p.x, p.y, p.z], { lookAt: [t.x, t.y, t.z] });
    };
    dom.removeButton.onclick = () => {
      if (this.selectedCamera !== null) this.client.removeCamera(this.selectedCamera);
    };
    dom.exportButton.onclick = () => this.client.requestExport();

    const el = this.renderer.domElement;
    el.addEventListener("pointerdown", (ev) => this.onPointerDown(ev));
    el.addEventListener("pointermove", (ev) => this.onPointerMove(ev));
    el.addEventListener("pointerup", () => (this.dragging = null));
    window.addEventListener("resize", () => {
      this.renderer.setSize(dom.container.clientWidth, dom.container.clientHeight);
      this.viewCamera.aspect = dom.container.clientWidth / dom.container.clientHeight;
      this.viewCamera.updateProjectionMatrix();
    });
  }

  loadMesh(url: string): void {
    new OBJLoader().load(url, (obj) => {
      obj.traverse((child) => {
        if (child instanceof THREE.Mesh) {
          child.material = new THREE.MeshLambertMaterial({
            color: 0x8a94a2,
            side: THREE.DoubleSide,
          });
        }
      });
      this.world.add(obj);
    });
  }

  setViewMode(mode: TransferMode): void {
    this.viewMode = mode;
    // Server-side mode switches what broadcast frames encode; the local
    // recolor below keeps stale frames consistent until the next one.
    this.client.setMode(mode);
    if (this.client.latestFrame) this.applyFrame(this.client.latestFrame);
  }

  private buildPointCloud(positions: Float32Array): void {
    if (this.points) this.world.remove(this.points);
    const geo = new THREE.BufferGeometry();
    geo.setAttribute("position", new THREE.BufferAttribute(positions, 3));
    const colors = new Float32Array(positions.length);
    this.colorAttr = new THREE.BufferAttribute(colors, 3);
    geo.setAttribute("color", this.colorAttr);
    this.points = new THREE.Points(
      geo,
      new THREE.PointsMaterial({ size: POINT_SIZE, vertexColors: true }),
    );
    this.world.add(this.points);
  }

  private applyFrame(frame: VolumeFrame): void {
    this.dom.hudRevision.textContent = String(frame.revision);
    this.updateHud();
    if (!this.colorAttr) return;
    colorize(frame, this.viewMode, this.colorAttr.array as Float32Array);
    this.colorAttr.needsUpdate = true;
  }

  private updateHud(): void {
    const hud = this.client.hud;
    this.dom.hudCoverage.textContent = `${(hud.coverage * 100).toFixed(2)}%`;
    this.dom.hudCameras.textContent = String(hud.cameraCount);
    this.dom.hudLatency.textContent = `${hud.latencyMs.toFixed(1)} ms`;
  }

  private syncGizmos(): void {
    const seen = new Set<number>();
    for (const [id, cam] of this.client.cameras) {
      seen.add(id);
      let gizmo = this.gizmos.get(id);
      if (!gizmo) {
        gizmo = buildGizmo(cam, id === this.selectedCamera);
        this.gizmos.set(id, gizmo);
        this.world.add(gizmo);
      }
      const pose = this.client.displayedPose(id) ?? cam.pose;
      this.placeGizmo(gizmo, pose);
    }
    for (const [id, gizmo] of this.gizmos) {
      if (!seen.has(id)) {
        this.world.remove(gizmo);
        this.gizmos.delete(id);
        this.closeFeed(id);
        if (this.selectedCamera === id) this.selectedCamera = null;
      }
    }
    this.updateHud();
  }

  private placeGizmo(gizmo: THREE.Group, pose: PoseMsg): void {
    gizmo.position.set(pose.position[0], pose.position[1], pose.position[2]);
    gizmo.quaternion.copy(wireQuatToThree(pose.quaternion));
  }

  private onPointerDown(ev: PointerEvent): void {
    const hit = this.pickGizmo(ev);
    if (hit === null) return;
    this.selectedCamera = hit;
    this.dragging = hit;
    const gizmo = this.gizmos.get(hit);
    if (gizmo) {
      this.dragPlane.set(new THREE.Vector3(0, 0, 1), -gizmo.position.z);
    }
    this.openFeed(hit);
    this.controls.enabled = false;
  }

  private onPointerMove(ev: PointerEvent): void {
    if (this.dragging === null) {
      return;
    }
    const gizmo = this.gizmos.get(this.dragging);
    if (!gizmo || !this.client.connected) {
      this.dragging = null;
      this.controls.enabled = true;
      return;
    }
    this.setPointerRay(ev);
    const target = new THREE.Vector3();
    if (!this.raycaster.ray.intersectPlane(this.dragPlane, target)) return;
    gizmo.position.copy(target);
    this.client.dragCamera(
      this.dragging,
      [target.x, target.y, target.z],
      threeQuatToWire(gizmo.quaternion),
    );
  }

  private pickGizmo(ev: PointerEvent): number | null {
    this.setPointerRay(ev);
    const bodies: THREE.Object3D[] = [];
    for (const gizmo of this.gizmos.values()) bodies.push(...gizmo.children);
    const hits = this.raycaster.intersectObjects(bodies, false);
    for (const hit of hits) {
      const id = hit.object.userData.cameraId;
      if (typeof id === "number") return id;
    }
    this.controls.enabled = true;
    return null;
  }

  private setPointerRay(ev: PointerEvent): void {
    const rect = this.renderer.domElement.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((ev.clientX - rect.left) / rect.width) * 2 - 1,
      -((ev.clientY - rect.top) / rect.height) * 2 + 1,
    );
    this.raycaster.setFromCamera(ndc, this.viewCamera);
  }

  // ------------------------------------------------------------------ feeds

  private openFeed(id: number): void {
    if (this.feedRenderers.has(id)) return;
    const cam = this.client.cameras.get(id);
    if (!cam) return;
    const canvas = document.createElement("canvas");
    canvas.className = "feed";
    canvas.title = `camera ${id}`;
    this.dom.feeds.appendChild(canvas);
    const renderer = new THREE.WebGLRenderer({ canvas, antialias: false });
    const [w, h] = cam.spec.resolution;
    renderer.setSize(FEED_WIDTH, Math.round((FEED_WIDTH * h) / w));
    this.feedRenderers.set(id, renderer);
  }

  private closeFeed(id: number): void {
    const renderer = this.feedRenderers.get(id);
    if (!renderer) return;
    renderer.domElement.remove();
    renderer.dispose();
    this.feedRenderers.delete(id);
  }

  private renderFeeds(): void {
    for (const [id, renderer] of this.feedRenderers) {
      const cam = this.client.cameras.get(id);
      if (!cam) continue;
      const pose = this.client.displayedPose(id) ?? cam.pose;
      const [w, h] = cam.spec.resolution;
      const feedCam = new THREE.PerspectiveCamera(
        verticalFovDeg(cam.spec),
        w / h,
        Math.max(cam.spec.min_range, 0.01),
        cam.spec.max_range,
      );
      feedCam.position.set(pose.position[0], pose.position[1], pose.position[2]);
      feedCam.quaternion.copy(wireQuatToThree(pose.quaternion));
      renderer.render(this.scene, feedCam);
    }
  }

  private animate(): void {
    requestAnimationFrame(() => this.animate());
    // Rendering keeps going on the latest frame even when no new volume
    // frames arrive; message handling never blocks this loop.
    this.controls.update();
    this.renderer.render(this.scene, this.viewCamera);
    this.renderFeeds();
  }
}
