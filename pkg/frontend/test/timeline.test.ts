import { describe, expect, it } from "vitest";

import { stackSegments } from "../src/viewmodel.js";
import { renderTimeline } from "../src/panes/timeline.js";
import type { OccupancySeries } from "../src/types.js";

import violationOccupancy from "./fixtures/violation-occupancy-area.json";
import lunchOccupancy from "./fixtures/lunch-occupancy-dining.json";

const violation = violationOccupancy as unknown as OccupancySeries;
const lunch = lunchOccupancy as unknown as OccupancySeries;

describe("occupancy timeline stacking", () => {
  it("stacks to the exact count for every fixture bucket", () => {
    for (const series of [violation, lunch]) {
      const segs = stackSegments(series.points);
      expect(segs.length).toBe(series.points.length);
      segs.forEach((s, i) => {
        expect(s.normal + s.excess).toBe(series.points[i].count);
        expect(s.count).toBe(series.points[i].count);
      });
    }
  });

  it("gives the excess segment pixel height exactly proportional to the split", () => {
    const segs = stackSegments(violation.points, 160);
    const peak = Math.max(...violation.points.map((p) => p.count));
    segs.forEach((s) => {
      expect(s.normalPx + s.excessPx).toBeCloseTo((s.count / peak) * 160, 9);
      if (s.excess === 0) expect(s.excessPx).toBe(0);
    });
  });

  it("marks exactly the violation hour red in the fixture", () => {
    const red = stackSegments(violation.points).filter((s) => s.excess > 0);
    expect(red.map((s) => [s.bucket, s.excess])).toEqual([["2020-02-11T20:00", 20]]);
  });

  it("rejects a corrupt response that breaks the identity", () => {
    const broken = [{ bucket: "x", count: 10, normal: 8, target_excess: 1 }];
    expect(() => stackSegments(broken)).toThrow(/identity/);
  });

  it("renders one red rect per over-limit bucket and none elsewhere", () => {
    const svg = renderTimeline(violation);
    const excessRects = svg.match(/class="excess"/g) ?? [];
    expect(excessRects.length).toBe(1);
    expect(svg).toContain('data-bucket="2020-02-11T20:00" data-count="120"');
  });

  it("keeps the axis on an empty range", () => {
    const svg = renderTimeline({ ...violation, points: [] });
    expect(svg).toContain("axis");
    expect(svg).toContain("no occupancy in range");
  });

  it("renders a zero-count hour as a zero-height bar, axis preserved", () => {
    const series = {
      ...violation,
      points: [
        { bucket: "2020-02-11T02:00", count: 0, normal: 0, target_excess: 0 },
        { bucket: "2020-02-11T03:00", count: 5, normal: 5, target_excess: 0 },
      ],
    };
    const segs = stackSegments(series.points, 160);
    expect(segs[0].normalPx).toBe(0);
    expect(renderTimeline(series)).toContain('height="0.00"');
  });
});
