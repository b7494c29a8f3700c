import { describe, expect, it } from "vitest";

import { FetchLike, Gateway, GatewayError } from "../src/api.js";

function fakeFetch(status: number, body: unknown, calls?: { url: string; init?: RequestInit }[]): FetchLike {
  return async (url, init) => {
    calls?.push({ url, init });
    return {
      ok: status >= 200 && status < 300,
      status,
      json: async () => body,
    } as Response;
  };
}

describe("gateway client", () => {
  it("posts JSON bodies and returns parsed payloads", async () => {
    const calls: { url: string; init?: RequestInit }[] = [];
    const gateway = new Gateway(fakeFetch(200, { suggestions: ["name"] }, calls));
    const resp = await gateway.complete("", 1, 1);
    expect(resp.suggestions).toEqual(["name"]);
    expect(calls[0].url).toBe("/nets/complete");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ source: "", line: 1, column: 1 });
  });

  it("raises GatewayError carrying the ApiError envelope", async () => {
    const gateway = new Gateway(fakeFetch(404, { code: "not_found", message: "unknown task 'x'" }));
    try {
      await gateway.cancel("x");
      expect.unreachable();
    } catch (error) {
      const ge = error as GatewayError;
      expect(ge).toBeInstanceOf(GatewayError);
      expect(ge.status).toBe(404);
      expect(ge.api.code).toBe("not_found");
      expect(ge.message).toContain("unknown task");
    }
  });

  it("builds the long-poll query string", async () => {
    const calls: { url: string }[] = [];
    const gateway = new Gateway(fakeFetch(200, { events: [], floor: 0, latest: 7 }, calls));
    await gateway.notifications(7, 25);
    expect(calls[0].url).toBe("/notifications?after=7&timeout=25");
  });
});
