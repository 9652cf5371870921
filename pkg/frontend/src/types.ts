/** Wire types for the /v1 occupancy service. */

export interface Building {
  id: string;
  name: string;
  floors: number;
}

export interface Floor {
  id: string;
  name: string;
  building: string;
}

export interface FloorAp {
  id: string;
  area: string;
  area_kind: string;
  x: number | null;
  y: number | null;
}

export interface OccupancyPoint {
  bucket: string;
  count: number;
  normal: number;
  target_excess: number;
}

export interface OccupancySeries {
  unit: string;
  granularity: string;
  bucket: string;
  threshold: number | null;
  points: OccupancyPoint[];
}

export interface HeatmapCell {
  ap: string;
  x: number;
  y: number;
  count: number;
  threshold: number | null;
  over: boolean;
}

export interface HeatmapDoc {
  floor: string;
  bucket: string;
  cells: HeatmapCell[];
}

export interface TransitionsDoc {
  schema: string;
  scope: string;
  units: string[];
  counts: number[][];
  total: number;
  window?: { from: string; to: string };
}

export interface ApiError {
  code: string;
  message: string;
}
