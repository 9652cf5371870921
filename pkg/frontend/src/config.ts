/** Runtime configuration: service base URL, token, polling cadence.
 * Values come from query parameters so the static bundle needs no build
 * step per deployment, e.g. ?api=http://host:8080&refresh=60
 */

export interface DashboardConfig {
  baseUrl: string;
  token: string | null;
  refreshMs: number;
}

export function configFrom(search: string): DashboardConfig {
  const params = new URLSearchParams(search);
  const refresh = Number(params.get("refresh") ?? "60");
  return {
    baseUrl: (params.get("api") ?? "http://127.0.0.1:8080").replace(/\/$/, ""),
    token: params.get("token"),
    refreshMs: (Number.isFinite(refresh) && refresh > 0 ? refresh : 60) * 1000,
  };
}
