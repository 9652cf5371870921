/** Transition chord pane: arcs per unit, ribbons per (from, to) pair with
 * counts on hover. */

import type { TransitionsDoc } from "../types.js";
import { chordLayout, dominantPair } from "../viewmodel.js";

const SIZE = 360;
const R = 140;
const CX = SIZE / 2;
const CY = SIZE / 2;

function polar(angle: number, radius: number): [number, number] {
  return [CX + radius * Math.cos(angle - Math.PI / 2), CY + radius * Math.sin(angle - Math.PI / 2)];
}

function arcPath(start: number, end: number): string {
  const [x0, y0] = polar(start, R);
  const [x1, y1] = polar(end, R);
  const large = end - start > Math.PI ? 1 : 0;
  return `M ${x0.toFixed(1)} ${y0.toFixed(1)} A ${R} ${R} 0 ${large} 1 ${x1.toFixed(1)} ${y1.toFixed(1)}`;
}

function ribbonPath(a0: number, a1: number): string {
  const inner = R - 8;
  const [x0, y0] = polar(a0, inner);
  const [x1, y1] = polar(a1, inner);
  return `M ${x0.toFixed(1)} ${y0.toFixed(1)} Q ${CX} ${CY} ${x1.toFixed(1)} ${y1.toFixed(1)}`;
}

export function renderChord(doc: TransitionsDoc): string {
  const layout = chordLayout(doc);
  if (layout.total === 0) {
    return `<svg viewBox="0 0 ${SIZE} ${SIZE}" class="chord">
      <text x="${CX}" y="${CY}" class="placeholder">no transitions in window</text>
    </svg>`;
  }
  const top = dominantPair(doc);
  const arcs = layout.arcs
    .map((a) => {
      const [lx, ly] = polar((a.start + a.end) / 2, R + 14);
      return `<g class="unit" data-unit="${a.unit}">
        <title>${a.unit}: ${a.total} movements</title>
        <path d="${arcPath(a.start, a.end)}" class="arc"/>
        <text x="${lx.toFixed(1)}" y="${ly.toFixed(1)}" class="unit-label">${a.unit}</text>
      </g>`;
    })
    .join("\n");
  const ribbons = layout.ribbons
    .map((r) => {
      const dominant = top !== null && r.from === top.from && r.to === top.to;
      const width = Math.max(1, 24 * (r.count / (top?.count ?? r.count)));
      return `<g class="ribbon${dominant ? " dominant" : ""}" data-from="${r.from}" data-to="${r.to}" data-count="${r.count}">
        <title>${r.from} &#8594; ${r.to}: ${r.count}</title>
        <path d="${ribbonPath(r.a0, r.a1)}" stroke-width="${width.toFixed(1)}"/>
      </g>`;
    })
    .join("\n");
  return `<svg viewBox="0 0 ${SIZE} ${SIZE}" class="chord">${ribbons}${arcs}</svg>`;
}
