/** Typed client for the /v1 API with stale-response suppression.
 *
 * Every pane issues overlapping polls; each request carries a sequence
 * number per channel and anything that resolves out of order is dropped,
 * so a slow old response can never overwrite a newer one.
 */

import type {
  Building,
  Floor,
  FloorAp,
  HeatmapDoc,
  OccupancySeries,
  TransitionsDoc,
} from "./types.js";
import type { DashboardConfig } from "./config.js";

export class StaleResponse extends Error {}

export class ApiClient {
  private seq: Record<string, number> = {};

  constructor(
    private config: DashboardConfig,
    private fetchFn: typeof fetch = fetch,
  ) {}

  url(path: string, params: Record<string, string> = {}): string {
    const q = new URLSearchParams(params).toString();
    return `${this.config.baseUrl}/v1${path}${q ? `?${q}` : ""}`;
  }

  /** Fetch JSON; reject with StaleResponse when a newer request on the
   * same channel has been issued since. */
  private async get<T>(channel: string, path: string, params: Record<string, string> = {}): Promise<T> {
    const mine = (this.seq[channel] ?? 0) + 1;
    this.seq[channel] = mine;
    const headers: Record<string, string> = {};
    if (this.config.token) headers["Authorization"] = `Bearer ${this.config.token}`;
    const res = await this.fetchFn(this.url(path, params), { headers });
    if (this.seq[channel] !== mine) throw new StaleResponse(channel);
    if (!res.ok) {
      let message = `${res.status}`;
      try {
        const body = await res.json();
        message = body.message ?? message;
      } catch {
        /* non-JSON error body */
      }
      throw new Error(message);
    }
    return (await res.json()) as T;
  }

  buildings(): Promise<Building[]> {
    return this.get("buildings", "/buildings");
  }

  floors(building: string): Promise<Floor[]> {
    return this.get("floors", `/buildings/${encodeURIComponent(building)}/floors`);
  }

  floorAps(floor: string): Promise<FloorAp[]> {
    return this.get("floorAps", `/floors/${encodeURIComponent(floor)}/aps`);
  }

  occupancy(unit: string, granularity: string, window?: { from: string; to: string }): Promise<OccupancySeries> {
    const params: Record<string, string> = { unit, granularity };
    if (window) {
      params.from = window.from;
      params.to = window.to;
    }
    return this.get("occupancy", "/occupancy", params);
  }

  heatmap(floor: string, bucket: string): Promise<HeatmapDoc> {
    return this.get("heatmap", "/heatmap", { floor, bucket });
  }

  transitions(scope: string, window?: { from: string; to: string }): Promise<TransitionsDoc> {
    const params: Record<string, string> = { scope };
    if (window) {
      params.from = window.from;
      params.to = window.to;
    }
    return this.get("transitions", "/transitions", params);
  }
}
