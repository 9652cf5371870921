/** Dashboard wiring: selector cascade drives the panes, everything polls
 * at the service refresh cadence, stale responses are dropped by the API
 * client's sequence numbers, and fetch failures raise a retry banner. */

import { ApiClient, StaleResponse } from "./api.js";
import { configFrom } from "./config.js";
import { renderChord } from "./panes/chord.js";
import { renderHeatmap } from "./panes/heatmap.js";
import { renderTimeline } from "./panes/timeline.js";
import { emptySelector, selectorReduce, type SelectorState } from "./viewmodel.js";

const config = configFrom(window.location.search);
const api = new ApiClient(config);

let selector: SelectorState = emptySelector;
let windowFrom = (document.getElementById("from") as HTMLInputElement).value;
let windowTo = (document.getElementById("to") as HTMLInputElement).value;
let heatBucket = (document.getElementById("heat-bucket") as HTMLInputElement).value;

const el = (id: string) => document.getElementById(id)!;

function banner(message: string | null): void {
  const node = el("banner");
  if (message === null) {
    node.hidden = true;
    return;
  }
  node.hidden = false;
  el("banner-text").textContent = message;
}

function guard(err: unknown, pane: string): void {
  if (err instanceof StaleResponse) return;
  banner(`${pane}: ${err instanceof Error ? err.message : String(err)}`);
}

function renderSelector(): void {
  const bsel = el("building") as HTMLSelectElement;
  bsel.innerHTML =
    `<option value="">building…</option>` +
    selector.buildings.map((b) => `<option value="${b}"${b === selector.building ? " selected" : ""}>${b}</option>`).join("");
  const fsel = el("floor") as HTMLSelectElement;
  fsel.innerHTML =
    `<option value="">floor…</option>` +
    selector.floors.map((f) => `<option value="${f}"${f === selector.floor ? " selected" : ""}>${f}</option>`).join("");
}

async function loadBuildings(): Promise<void> {
  try {
    const buildings = await api.buildings();
    banner(null);
    selector = selectorReduce(selector, { kind: "buildings", ids: buildings.map((b) => b.id) });
    renderSelector();
  } catch (err) {
    guard(err, "buildings");
  }
}

async function loadFloors(): Promise<void> {
  if (!selector.building) return;
  const building = selector.building;
  try {
    const floors = await api.floors(building);
    selector = selectorReduce(selector, { kind: "floors", building, ids: floors.map((f) => f.id) });
    renderSelector();
  } catch (err) {
    guard(err, "floors");
  }
}

async function refreshTimeline(): Promise<void> {
  if (!selector.building) return;
  try {
    const series = await api.occupancy(selector.building, "Building", { from: windowFrom, to: windowTo });
    el("timeline").innerHTML = renderTimeline(series);
    el("timeline-title").textContent =
      `${series.unit} occupancy` + (series.threshold !== null ? ` (limit ${series.threshold})` : "");
  } catch (err) {
    guard(err, "occupancy");
  }
}

async function refreshHeatmap(): Promise<void> {
  if (!selector.floor) return;
  try {
    const doc = await api.heatmap(selector.floor, heatBucket);
    el("heatmap").innerHTML = renderHeatmap(doc);
    el("heatmap-title").textContent = `${doc.floor} @ ${doc.bucket}`;
  } catch (err) {
    guard(err, "heatmap");
  }
}

async function refreshChord(): Promise<void> {
  try {
    const doc = await api.transitions("Building", { from: windowFrom, to: windowTo });
    el("chord").innerHTML = renderChord(doc);
  } catch (err) {
    guard(err, "transitions");
  }
}

function refreshAll(): void {
  void loadBuildings();
  void loadFloors();
  void refreshTimeline();
  void refreshHeatmap();
  void refreshChord();
}

el("building").addEventListener("change", (e) => {
  const id = (e.target as HTMLSelectElement).value;
  if (id) {
    selector = selectorReduce(selector, { kind: "pickBuilding", id });
    renderSelector();
    void loadFloors().then(refreshTimeline);
  }
});

el("floor").addEventListener("change", (e) => {
  const id = (e.target as HTMLSelectElement).value;
  if (id) {
    selector = selectorReduce(selector, { kind: "pickFloor", id });
    void refreshHeatmap();
  }
});

el("from").addEventListener("change", (e) => {
  windowFrom = (e.target as HTMLInputElement).value;
  void refreshTimeline();
  void refreshChord();
});

el("to").addEventListener("change", (e) => {
  windowTo = (e.target as HTMLInputElement).value;
  void refreshTimeline();
  void refreshChord();
});

el("heat-bucket").addEventListener("change", (e) => {
  heatBucket = (e.target as HTMLInputElement).value;
  void refreshHeatmap();
});

el("banner-retry").addEventListener("click", () => {
  banner(null);
  refreshAll();
});

refreshAll();
window.setInterval(refreshAll, config.refreshMs);
