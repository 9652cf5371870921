/** Occupancy timeline: stacked bars, compliant portion vs target excess. */

import type { OccupancySeries } from "../types.js";
import { stackSegments } from "../viewmodel.js";

const W = 640;
const H = 200;
const PLOT_H = 160;
const AXIS_Y = H - 24;

export function renderTimeline(series: OccupancySeries): string {
  const segs = stackSegments(series.points, PLOT_H);
  if (!segs.length) {
    return `<svg viewBox="0 0 ${W} ${H}" class="timeline">
      <line x1="24" y1="${AXIS_Y}" x2="${W - 8}" y2="${AXIS_Y}" class="axis"/>
      <text x="${W / 2}" y="${H / 2}" class="placeholder">no occupancy in range</text>
    </svg>`;
  }
  const bw = Math.min(28, (W - 48) / segs.length);
  const bars = segs
    .map((s, i) => {
      const x = 28 + i * bw;
      const normalY = AXIS_Y - s.normalPx;
      const excessY = normalY - s.excessPx;
      const hour = s.bucket.slice(11, 16);
      const label = i % Math.ceil(segs.length / 12) === 0
        ? `<text x="${x + bw / 2}" y="${AXIS_Y + 14}" class="tick">${hour}</text>`
        : "";
      return `<g class="bar" data-bucket="${s.bucket}" data-count="${s.count}">
        <title>${s.bucket}: ${s.count} (${s.normal} compliant${s.excess ? `, ${s.excess} over` : ""})</title>
        <rect x="${x}" y="${normalY.toFixed(2)}" width="${(bw - 2).toFixed(2)}" height="${s.normalPx.toFixed(2)}" class="normal"/>
        ${s.excess > 0 ? `<rect x="${x}" y="${excessY.toFixed(2)}" width="${(bw - 2).toFixed(2)}" height="${s.excessPx.toFixed(2)}" class="excess"/>` : ""}
        ${label}
      </g>`;
    })
    .join("\n");
  const thresholdLine =
    series.threshold !== null
      ? (() => {
          const peak = Math.max(1, ...segs.map((s) => s.count));
          const y = AXIS_Y - (series.threshold! / peak) * PLOT_H;
          return y >= 8
            ? `<line x1="24" y1="${y.toFixed(2)}" x2="${W - 8}" y2="${y.toFixed(2)}" class="threshold"/>`
            : "";
        })()
      : "";
  return `<svg viewBox="0 0 ${W} ${H}" class="timeline">
    <line x1="24" y1="${AXIS_Y}" x2="${W - 8}" y2="${AXIS_Y}" class="axis"/>
    ${thresholdLine}
    ${bars}
  </svg>`;
}
