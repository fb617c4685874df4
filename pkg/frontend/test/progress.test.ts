import { afterEach, describe, expect, it, vi } from "vitest";

import { ConsoleApi, FetchLike, Progress } from "../src/api.js";
import { percentLabeled, ProgressPoller, ProgressView } from "../src/progress.js";

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

function progressBody(labeled: number) {
  return {
    labeled,
    total: 10,
    relevant: labeled,
    not_relevant: 0,
    per_annotator: { alice: labeled },
    claims_covered: 1,
    claims_total: 2,
  };
}

function makeProgress(labeled: number, total: number): Progress {
  return {
    labeled,
    total,
    relevant: labeled,
    notRelevant: 0,
    perAnnotator: {},
    claimsCovered: 0,
    claimsTotal: 0,
  };
}

describe("polling", () => {
  afterEach(() => {
    vi.useRealTimers();
  });

  it("a good tick replaces the view and notifies", async () => {
    const api = new ConsoleApi("http://svc.test", async () =>
      json(progressBody(3)),
    );
    const seen: ProgressView[] = [];
    const poller = new ProgressPoller(api, (view) => seen.push(view));
    const view = await poller.tick();
    expect(view.stale).toBe(false);
    expect(view.values?.labeled).toBe(3);
    expect(view.values?.perAnnotator).toEqual({ alice: 3 });
    expect(seen).toEqual([view]);
  });

  it("a failed tick keeps the last values and flags them stale", async () => {
    let down = false;
    const fetchImpl: FetchLike = async () => {
      if (down) {
        throw new TypeError("fetch failed");
      }
      return json(progressBody(4));
    };
    const poller = new ProgressPoller(new ConsoleApi("http://svc.test", fetchImpl));
    await poller.tick();

    down = true;
    const staleView = await poller.tick();
    expect(staleView.stale).toBe(true);
    expect(staleView.values?.labeled).toBe(4);

    down = false;
    const fresh = await poller.tick();
    expect(fresh.stale).toBe(false);
  });

  it("start polls on the interval until stopped", async () => {
    vi.useFakeTimers();
    let polls = 0;
    const api = new ConsoleApi("http://svc.test", async () => {
      polls += 1;
      return json(progressBody(polls));
    });
    const poller = new ProgressPoller(api);
    const stop = poller.start(1000);
    await vi.advanceTimersByTimeAsync(0);
    expect(polls).toBe(1);
    await vi.advanceTimersByTimeAsync(2000);
    expect(polls).toBe(3);
    stop();
    await vi.advanceTimersByTimeAsync(3000);
    expect(polls).toBe(3);
    expect(poller.view.values?.labeled).toBe(3);
  });
});

describe("percentLabeled", () => {
  it("rounds 3 of 10 to 30", () => {
    expect(percentLabeled(makeProgress(3, 10))).toBe(30);
  });

  it("treats an empty pool as 0, not NaN", () => {
    expect(percentLabeled(makeProgress(0, 0))).toBe(0);
  });

  it("caps a full pool at 100", () => {
    expect(percentLabeled(makeProgress(10, 10))).toBe(100);
  });
});
