import type { FetchLike } from "../src/api";

export interface RecordedRequest {
  url: string;
  method: string;
  body: string | null;
}

export interface WireResponse {
  status: number;
  payload: unknown;
}

/**
 * Fetch stand-in that records every outbound request and answers from a
 * handler speaking the gateway's wire schema. Handing it a throwing
 * handler simulates an unreachable gateway.
 */
export function recordingFetch(
  handler: (path: string, body: unknown) => WireResponse | Promise<WireResponse>,
): { fetch: FetchLike; requests: RecordedRequest[] } {
  const requests: RecordedRequest[] = [];
  const fetchFn: FetchLike = async (url, init) => {
    const body = init?.body !== undefined ? String(init.body) : null;
    requests.push({ url, method: init?.method ?? "GET", body });
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const result = await handler(path, body === null ? undefined : JSON.parse(body));
    return new Response(JSON.stringify(result.payload), {
      status: result.status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { fetch: fetchFn, requests };
}

export function sentPayloads(requests: RecordedRequest[]): string {
  return requests.map((r) => `${r.method} ${r.url} ${r.body ?? ""}`).join("\n");
}
