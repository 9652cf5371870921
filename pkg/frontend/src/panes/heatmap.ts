/** Floor heatmap: one cell per AP at its floor-local position; red marks
 * occupancy past the restricted threshold. */

import type { HeatmapDoc } from "../types.js";
import { heatmapView } from "../viewmodel.js";

const W = 400;
const H = 240;

export function renderHeatmap(doc: HeatmapDoc): string {
  const cells = heatmapView(doc.cells, W, H);
  if (!cells.length) {
    return `<svg viewBox="0 0 ${W} ${H}" class="heatmap">
      <text x="${W / 2}" y="${H / 2}" class="placeholder">no APs on this floor</text>
    </svg>`;
  }
  const dots = cells
    .map((c) => {
      const r = 10 + 14 * c.intensity;
      const cls = c.red ? "cell over" : "cell";
      const opacity = (0.25 + 0.75 * c.intensity).toFixed(3);
      return `<g class="${cls}" data-ap="${c.ap}" data-over="${c.red}">
        <title>${c.label}</title>
        <circle cx="${c.cx.toFixed(1)}" cy="${c.cy.toFixed(1)}" r="${r.toFixed(1)}" fill-opacity="${opacity}"/>
        <text x="${c.cx.toFixed(1)}" y="${(c.cy + 4).toFixed(1)}" class="count">${c.count}</text>
      </g>`;
    })
    .join("\n");
  return `<svg viewBox="0 0 ${W} ${H}" class="heatmap" data-bucket="${doc.bucket}">${dots}</svg>`;
}
