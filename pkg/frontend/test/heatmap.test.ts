import { describe, expect, it } from "vitest";

import { heatmapView } from "../src/viewmodel.js";
import { renderHeatmap } from "../src/panes/heatmap.js";
import type { HeatmapDoc } from "../src/types.js";

import violationHeatmap from "./fixtures/violation-heatmap.json";
import quietHeatmap from "./fixtures/violation-heatmap-quiet.json";

const spike = violationHeatmap as unknown as HeatmapDoc;
const quiet = quietHeatmap as unknown as HeatmapDoc;

describe("floor heatmap", () => {
  it("marks exactly the over-threshold cells red (spike fixture)", () => {
    const red = heatmapView(spike.cells).filter((c) => c.red).map((c) => c.ap);
    const expected = spike.cells.filter((c) => c.threshold !== null && c.count > c.threshold).map((c) => c.ap);
    expect(red).toEqual(expected);
    expect(red).toEqual(["d1-f1-a1-ap1"]);
  });

  it("marks nothing red in the quiet hour", () => {
    expect(heatmapView(quiet.cells).some((c) => c.red)).toBe(false);
  });

  it("places every AP and shows its count", () => {
    const views = heatmapView(spike.cells);
    expect(views.map((v) => v.ap).sort()).toEqual(spike.cells.map((c) => c.ap).sort());
    for (const v of views) {
      const cell = spike.cells.find((c) => c.ap === v.ap)!;
      expect(v.count).toBe(cell.count);
      expect(v.label).toContain(String(cell.count));
    }
    const busiest = Math.max(...spike.cells.map((c) => c.count));
    for (const v of views) expect(v.intensity).toBeCloseTo(v.count / busiest, 9);
  });

  it("renders a single red svg cell for the spike hour", () => {
    const svg = renderHeatmap(spike);
    expect((svg.match(/class="cell over"/g) ?? []).length).toBe(1);
    expect(svg).toContain('data-ap="d1-f1-a1-ap1" data-over="true"');
    const quietSvg = renderHeatmap(quiet);
    expect(quietSvg).not.toContain("cell over");
  });

  it("handles an empty floor", () => {
    expect(renderHeatmap({ floor: "f", bucket: "b", cells: [] })).toContain("no APs");
  });
});
