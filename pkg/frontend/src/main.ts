import { SessionClient } from "./client";
import { Studio, StudioDom } from "./studio";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const params = new URLSearchParams(window.location.search);
const wsUrl =
  params.get("ws") ??
  `${window.location.protocol === "https:" ? "wss:" : "ws:"}//${window.location.host}/ws`;

const dom: StudioDom = {
  container: el("viewport"),
  hudCoverage: el("hud-coverage"),
  hudCameras: el("hud-cameras"),
  hudLatency: el("hud-latency"),
  hudRevision: el("hud-revision"),
  banner: el("banner"),
  modeQuality: el("mode-quality"),
  modeUncovered: el("mode-uncovered"),
  scaleSlider: el("scale"),
  addButton: el("add-camera"),
  removeButton: el("remove-camera"),
  exportButton: el("export"),
  feeds: el("feeds"),
};

const client = new SessionClient(wsUrl);
const studio = new Studio(client, dom);

const meshUrl = params.get("mesh");
if (meshUrl) studio.loadMesh(meshUrl);

client.connect();
