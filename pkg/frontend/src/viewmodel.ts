/** Pure view models: everything panes draw is derived here, testable
 * without a DOM. The dashboard renders only values the API delivered;
 * the single client-side computation is the normal+excess stacking
 * identity, asserted where it is used.
 */

import type { HeatmapCell, OccupancyPoint, TransitionsDoc } from "./types.js";

// -- occupancy timeline --------------------------------------------------------

export interface StackSegment {
  bucket: string;
  count: number;
  normal: number;
  excess: number;
  /** pixel heights; normalPx + excessPx represent exactly `count` */
  normalPx: number;
  excessPx: number;
}

export function stackSegments(points: OccupancyPoint[], maxHeightPx = 160): StackSegment[] {
  const peak = Math.max(1, ...points.map((p) => p.count));
  return points.map((p) => {
    if (p.normal + p.target_excess !== p.count) {
      // the service guarantees this identity; a violation means the
      // response is corrupt, not something to paper over
      throw new Error(`stacking identity broken at ${p.bucket}: ${p.normal}+${p.target_excess}!=${p.count}`);
    }
    const scale = maxHeightPx / peak;
    return {
      bucket: p.bucket,
      count: p.count,
      normal: p.normal,
      excess: p.target_excess,
      normalPx: p.normal * scale,
      excessPx: p.target_excess * scale,
    };
  });
}

// -- floor heatmap ---------------------------------------------------------------

export interface HeatCellView {
  ap: string;
  /** viewBox coordinates */
  cx: number;
  cy: number;
  count: number;
  /** 0..1 intensity relative to the busiest cell */
  intensity: number;
  red: boolean;
  label: string;
}

export function heatmapView(cells: HeatmapCell[], width = 400, height = 240, pad = 24): HeatCellView[] {
  if (!cells.length) return [];
  const xs = cells.map((c) => c.x);
  const ys = cells.map((c) => c.y);
  const x0 = Math.min(...xs);
  const x1 = Math.max(...xs);
  const y0 = Math.min(...ys);
  const y1 = Math.max(...ys);
  const sx = (x: number) => pad + ((x - x0) / Math.max(1e-9, x1 - x0)) * (width - 2 * pad);
  const sy = (y: number) => pad + ((y - y0) / Math.max(1e-9, y1 - y0)) * (height - 2 * pad);
  const peak = Math.max(1, ...cells.map((c) => c.count));
  return cells.map((c) => ({
    ap: c.ap,
    cx: cells.length === 1 ? width / 2 : sx(c.x),
    cy: cells.length === 1 ? height / 2 : sy(c.y),
    count: c.count,
    intensity: c.count / peak,
    red: c.over,
    label: `${c.ap}: ${c.count}${c.threshold !== null ? ` (limit ${c.threshold})` : ""}`,
  }));
}

// -- transition chord --------------------------------------------------------------

export interface ChordArc {
  unit: string;
  start: number; // radians
  end: number;
  total: number; // departures + arrivals
}

export interface ChordRibbon {
  from: string;
  to: string;
  count: number;
  /** anchor angles on the source and target arcs */
  a0: number;
  a1: number;
  width: number; // radians at the source arc
}

export interface ChordLayout {
  arcs: ChordArc[];
  ribbons: ChordRibbon[];
  total: number;
}

const TAU = Math.PI * 2;

export function dominantPair(doc: TransitionsDoc): { from: string; to: string; count: number } | null {
  let best: { from: string; to: string; count: number } | null = null;
  doc.counts.forEach((row, i) => {
    row.forEach((count, j) => {
      if (count > 0 && (best === null || count > best.count)) {
        best = { from: doc.units[i], to: doc.units[j], count };
      }
    });
  });
  return best;
}

export function chordLayout(doc: TransitionsDoc, padding = 0.04): ChordLayout {
  const n = doc.units.length;
  const flow = doc.units.map((_, i) => {
    let out = 0;
    let inn = 0;
    for (let j = 0; j < n; j++) {
      out += doc.counts[i][j];
      inn += doc.counts[j][i];
    }
    return out + inn;
  });
  const total = flow.reduce((a, b) => a + b, 0);
  const arcs: ChordArc[] = [];
  const span = TAU - padding * n;
  let angle = 0;
  for (let i = 0; i < n; i++) {
    const width = total > 0 ? (flow[i] / total) * span : span / n;
    arcs.push({ unit: doc.units[i], start: angle, end: angle + width, total: flow[i] });
    angle += width + padding;
  }
  const ribbons: ChordRibbon[] = [];
  // each arc hands out sub-spans to its outgoing then incoming partners
  const cursor = arcs.map((a) => a.start);
  const anchor = (i: number, amount: number): number => {
    const arc = arcs[i];
    const width = arc.total > 0 ? (amount / arc.total) * (arc.end - arc.start) : 0;
    const mid = cursor[i] + width / 2;
    cursor[i] += width;
    return mid;
  };
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      const count = doc.counts[i][j];
      if (count <= 0) continue;
      const a0 = anchor(i, count);
      const a1 = anchor(j, count);
      const width = total > 0 ? (count / total) * span : 0;
      ribbons.push({ from: doc.units[i], to: doc.units[j], count, a0, a1, width });
    }
  }
  return { arcs, ribbons, total: doc.total };
}

// -- selector cascade ---------------------------------------------------------------

export interface SelectorState {
  buildings: string[];
  floors: string[];
  building: string | null;
  floor: string | null;
}

export const emptySelector: SelectorState = {
  buildings: [],
  floors: [],
  building: null,
  floor: null,
};

export type SelectorEvent =
  | { kind: "buildings"; ids: string[] }
  | { kind: "floors"; building: string; ids: string[] }
  | { kind: "pickBuilding"; id: string }
  | { kind: "pickFloor"; id: string };

/** Cascading drill-down: picking a building invalidates the floor choice;
 * floor lists arriving for a stale building are ignored. */
export function selectorReduce(state: SelectorState, event: SelectorEvent): SelectorState {
  switch (event.kind) {
    case "buildings": {
      const building = state.building && event.ids.includes(state.building) ? state.building : null;
      return { ...state, buildings: event.ids, building, floors: building ? state.floors : [], floor: building ? state.floor : null };
    }
    case "floors":
      if (event.building !== state.building) return state;
      return { ...state, floors: event.ids, floor: state.floor && event.ids.includes(state.floor) ? state.floor : null };
    case "pickBuilding":
      if (event.id === state.building) return state;
      return { ...state, building: event.id, floors: [], floor: null };
    case "pickFloor":
      return state.floors.includes(event.id) ? { ...state, floor: event.id } : state;
  }
}
