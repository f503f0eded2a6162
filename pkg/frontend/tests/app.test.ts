// UI contract against the frozen fixture case (captured from the live
// scoring service): panel count, detail requests, heatmap sourcing,
// confidence endpoints, discrepancy navigation, verbatim statistics.

import { beforeEach, describe, expect, it } from "vitest";
import { ApiClient } from "../src/api";
import { App } from "../src/main";
import { confidenceRamp } from "../src/color";
import { CaseDocument, EpochDetail } from "../src/types";
import caseFixtureJson from "./fixtures/case_done.json";
import epochFixtureJson from "./fixtures/epoch_detail.json";

const caseFixture = caseFixtureJson as unknown as CaseDocument;
const epochFixture = epochFixtureJson as unknown as EpochDetail;

interface Served {
  requests: string[];
}

function jsonResponse(body: unknown, status = 200): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => body,
  } as unknown as Response;
}

function fixtureFetch(doc: CaseDocument, served: Served) {
  const epochCount = doc.epoch_count; // pinned: the served recording's size
  return async (url: string): Promise<Response> => {
    served.requests.push(url);
    const epochMatch = url.match(/^\/cases\/([^/]+)\/epochs\/(\d+)$/);
    if (epochMatch) {
      const t = Number(epochMatch[2]);
      if (t >= epochCount) return jsonResponse({ detail: "out of range" }, 404);
      return jsonResponse({ ...epochFixture, epoch: t });
    }
    if (url === `/cases/${doc.case_id}`) return jsonResponse(doc);
    return jsonResponse({ detail: "unknown" }, 404);
  };
}

function stubCanvas(): void {
  (HTMLCanvasElement.prototype as unknown as { getContext: unknown }).getContext =
    function () {
      return {
        fillStyle: "",
        strokeStyle: "",
        lineWidth: 1,
        clearRect: () => {},
        fillRect: () => {},
        beginPath: () => {},
        moveTo: () => {},
        lineTo: () => {},
        stroke: () => {},
        createImageData: (w: number, h: number) =>
          ({ width: w, height: h, data: new Uint8ClampedArray(4 * w * h) }),
        putImageData: () => {},
      };
    };
}

async function flush(): Promise<void> {
  for (let i = 0; i < 4; i++) await new Promise((r) => setTimeout(r, 0));
}

function makeApp(doc: CaseDocument = caseFixture): { app: App; served: Served } {
  stubCanvas();
  const served: Served = { requests: [] };
  const root = document.createElement("div");
  document.body.innerHTML = "";
  document.body.append(root);
  const api = new ApiClient("", fixtureFetch(doc, served));
  return { app: new App(root, api), served };
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("render_case", () => {
  it("renders exactly 4 panels", async () => {
    const { app } = makeApp();
    await app.open(caseFixture.case_id);
    const panels = app.root.querySelectorAll(".panel");
    expect(panels).toHaveLength(4);
    const names = Array.from(panels).map((p) => p.getAttribute("data-panel"));
    expect(names).toEqual(["waveform", "expert_stages", "predicted_stages",
                           "average_spectrogram"]);
  });

  it("shows every statistic verbatim from the service response", async () => {
    const { app } = makeApp();
    await app.open(caseFixture.case_id);
    const report = caseFixture.result!.sleep_report;
    const text = (key: string) =>
      app.root.querySelector(`[data-stat="${key}"]`)!.textContent;
    expect(text("sleep_efficiency")).toBe(String(report.sleep_efficiency));
    expect(text("fragmentation_index")).toBe(String(report.fragmentation_index));
    expect(text("total_sleep_min")).toBe(String(report.total_sleep_min));
    expect(text("total_recording_min")).toBe(String(report.total_recording_min));
    for (const [stage, minutes] of Object.entries(report.minutes_per_stage)) {
      expect(text(`minutes.${stage}`)).toBe(String(minutes));
    }
  });

  it("hides the expert track and shows no discrepancy markers without a sidecar", async () => {
    const noExpert: CaseDocument = JSON.parse(JSON.stringify(caseFixture));
    delete noExpert.result!.expert_stages;
    delete noExpert.result!.disagreements;
    noExpert.has_expert = false;
    const { app } = makeApp(noExpert);
    await app.open(noExpert.case_id);
    const expertPanel = app.root.querySelector<HTMLElement>('[data-panel="expert_stages"]')!;
    expect(expertPanel.hidden).toBe(true);
    const notice = app.root.querySelector<HTMLElement>(".nav-notice")!;
    expect(notice.hidden).toBe(false);
  });

  it("shows the service failure message for a failed case", async () => {
    const failed: CaseDocument = {
      ...caseFixture, state: "failed", error: "ValueError: bad montage", result: undefined,
    };
    const { app } = makeApp(failed);
    await app.open(failed.case_id);
    const banner = app.root.querySelector<HTMLElement>(".error-banner")!;
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toContain("ValueError: bad montage");
  });
});

describe("select_epoch", () => {
  it("issues the correct detail request for a click mapping to epoch 17", async () => {
    const { app, served } = makeApp();
    await app.open(caseFixture.case_id);
    served.requests.length = 0;
    const track = app.root.querySelector<HTMLCanvasElement>(".pred-canvas")!;
    track.dispatchEvent(new MouseEvent("click", { clientX: 420 }));  // 420/960*40 = 17.5
    await flush();
    expect(served.requests).toContain(`/cases/${caseFixture.case_id}/epochs/17`);
    expect(app.selected).toBe(17);
  });

  it("displays a heatmap sourced from the 29x257 grid", async () => {
    const { app } = makeApp();
    await app.open(caseFixture.case_id);
    await app.selectEpoch(17);
    const heat = app.root.querySelector<HTMLCanvasElement>(".heatmap-canvas")!;
    expect(heat.dataset.gridCols).toBe("29");
    expect(heat.dataset.gridRows).toBe("257");
    expect(heat.width).toBe(29);
    expect(heat.height).toBe(257);
    expect(epochFixture.spectrogram_db).toHaveLength(29);
    expect(epochFixture.spectrogram_db[0]).toHaveLength(257);
  });

  it("clamps arrow navigation at the last epoch", async () => {
    const { app } = makeApp();
    await app.open(caseFixture.case_id);
    await app.selectEpoch(caseFixture.epoch_count - 1);
    app.handleKey(new KeyboardEvent("keydown", { key: "ArrowRight" }));
    await flush();
    expect(app.selected).toBe(caseFixture.epoch_count - 1);
    app.handleKey(new KeyboardEvent("keydown", { key: "ArrowLeft" }));
    await flush();
    expect(app.selected).toBe(caseFixture.epoch_count - 2);
  });

  it("keeps the view on fetch failure and reports a retryable error", async () => {
    const { app } = makeApp();
    await app.open(caseFixture.case_id);
    await app.selectEpoch(3);
    // epoch_count is 40; ask the API for one past the end by forcing state
    app.doc!.epoch_count = 41;
    await app.selectEpoch(40); // fixture fetch 404s
    const banner = app.root.querySelector<HTMLElement>(".error-banner")!;
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toContain("retry");
    expect(app.detail!.epoch).toBe(3); // previous detail preserved
  });

  it("discards stale detail responses", async () => {
    stubCanvas();
    const served: Served = { requests: [] };
    const root = document.createElement("div");
    document.body.append(root);
    const pending: { url: string; resolve: (r: Response) => void }[] = [];
    const api = new ApiClient("", (url: string) => {
      if (url.includes("/epochs/")) {
        return new Promise<Response>((resolve) => pending.push({ url, resolve }));
      }
      return fixtureFetch(caseFixture, served)(url);
    });
    const app = new App(root, api);
    app.doc = JSON.parse(JSON.stringify(caseFixture));
    void app.selectEpoch(1);
    void app.selectEpoch(2);
    await flush();
    // resolve the NEWER request first, then the stale one
    const byEpoch = (t: number) => pending.find((p) => p.url.endsWith(`/epochs/${t}`))!;
    byEpoch(2).resolve(jsonResponse({ ...epochFixture, epoch: 2 }));
    await flush();
    byEpoch(1).resolve(jsonResponse({ ...epochFixture, epoch: 1 }));
    await flush();
    expect(app.detail!.epoch).toBe(2); // stale epoch-1 response ignored
  });
});

describe("confidence endpoints", () => {
  it("maps p=0 to pure red and p=1 to pure green", () => {
    expect(confidenceRamp(0)).toEqual([255, 0, 0]);
    expect(confidenceRamp(1)).toEqual([0, 255, 0]);
  });
});

describe("discrepancy navigation", () => {
  it("visits exactly the fixture's disagreement set, then wraps with an indicator", async () => {
    const { app } = makeApp();
    await app.open(caseFixture.case_id);
    const expected = [...caseFixture.result!.disagreements!].sort((a, b) => a - b);
    expect(expected).toEqual([5, 26, 33]);

    const visited: number[] = [];
    const wrap = app.root.querySelector<HTMLElement>(".wrap-indicator")!;
    for (let i = 0; i < expected.length; i++) {
      app.jumpDisagreement(1);
      await flush();
      visited.push(app.selected);
      expect(wrap.hidden).toBe(true);
    }
    expect(visited).toEqual(expected);

    app.jumpDisagreement(1); // past the last one: wraps to the smallest
    await flush();
    expect(app.selected).toBe(expected[0]);
    expect(wrap.hidden).toBe(false);
  });

  it("walks backward to the largest index below the cursor", async () => {
    const { app } = makeApp();
    await app.open(caseFixture.case_id);
    await app.selectEpoch(30);
    app.jumpDisagreement(-1);
    await flush();
    expect(app.selected).toBe(26);
  });

  it("notices an empty disagreement set", async () => {
    const identical: CaseDocument = JSON.parse(JSON.stringify(caseFixture));
    identical.result!.disagreements = [];
    const { app } = makeApp(identical);
    await app.open(identical.case_id);
    app.jumpDisagreement(1);
    await flush();
    const notice = app.root.querySelector<HTMLElement>(".nav-notice")!;
    expect(notice.hidden).toBe(false);
    expect(notice.textContent).toBe("no discrepancies");
  });
});
