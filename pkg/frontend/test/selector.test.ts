import { describe, expect, it } from "vitest";

import { emptySelector, selectorReduce } from "../src/viewmodel.js";
import type { Building, Floor } from "../src/types.js";

import buildings from "./fixtures/violation-buildings.json";
import floors from "./fixtures/violation-floors.json";

const buildingIds = (buildings as unknown as Building[]).map((b) => b.id);
const floorIds = (floors as unknown as Floor[]).map((f) => f.id);

describe("building/floor drill-down", () => {
  it("lists the fixture buildings", () => {
    const s = selectorReduce(emptySelector, { kind: "buildings", ids: buildingIds });
    expect(s.buildings).toEqual(["d1"]);
  });

  it("picking a building loads its floors; picking a floor selects it", () => {
    let s = selectorReduce(emptySelector, { kind: "buildings", ids: buildingIds });
    s = selectorReduce(s, { kind: "pickBuilding", id: "d1" });
    s = selectorReduce(s, { kind: "floors", building: "d1", ids: floorIds });
    expect(s.floors).toEqual(["d1-f1"]);
    s = selectorReduce(s, { kind: "pickFloor", id: "d1-f1" });
    expect(s.floor).toBe("d1-f1");
  });

  it("switching buildings clears the floor selection", () => {
    let s = selectorReduce(emptySelector, { kind: "buildings", ids: ["a", "b"] });
    s = selectorReduce(s, { kind: "pickBuilding", id: "a" });
    s = selectorReduce(s, { kind: "floors", building: "a", ids: ["a-f1"] });
    s = selectorReduce(s, { kind: "pickFloor", id: "a-f1" });
    s = selectorReduce(s, { kind: "pickBuilding", id: "b" });
    expect(s.floor).toBeNull();
    expect(s.floors).toEqual([]);
  });

  it("ignores a floor list for a building no longer selected", () => {
    let s = selectorReduce(emptySelector, { kind: "buildings", ids: ["a", "b"] });
    s = selectorReduce(s, { kind: "pickBuilding", id: "a" });
    s = selectorReduce(s, { kind: "pickBuilding", id: "b" });
    const stale = selectorReduce(s, { kind: "floors", building: "a", ids: ["a-f1"] });
    expect(stale).toBe(s);
  });

  it("rejects picking a floor that is not offered", () => {
    let s = selectorReduce(emptySelector, { kind: "buildings", ids: ["a"] });
    s = selectorReduce(s, { kind: "pickBuilding", id: "a" });
    const same = selectorReduce(s, { kind: "pickFloor", id: "ghost" });
    expect(same.floor).toBeNull();
  });

  it("keeps a still-valid selection across a refresh", () => {
    let s = selectorReduce(emptySelector, { kind: "buildings", ids: ["a", "b"] });
    s = selectorReduce(s, { kind: "pickBuilding", id: "b" });
    s = selectorReduce(s, { kind: "floors", building: "b", ids: ["b-f1"] });
    s = selectorReduce(s, { kind: "pickFloor", id: "b-f1" });
    s = selectorReduce(s, { kind: "buildings", ids: ["a", "b"] });
    expect(s.building).toBe("b");
    expect(s.floor).toBe("b-f1");
    s = selectorReduce(s, { kind: "buildings", ids: ["a"] });
    expect(s.building).toBeNull();
  });
});
