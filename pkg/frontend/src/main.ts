// Review interface: four stacked panels (epoch waveform, expert stages,
// predicted stages with confidence, average spectrogram) plus a sleep
// statistics sidebar. Every displayed number comes from a service
// response field; the client computes nothing clinical itself.

import { ApiClient } from "./api";
import { decodeWaveform } from "./decode";
import { Ctx2D, markEpoch, renderConfidenceTrack, renderHeatmap, renderStageTrack,
         renderWaveform } from "./render";
import { clampEpoch, epochFromClick, lowConfidenceEpochs, nextDisagreement } from "./state";
import { CaseDocument, EpochDetail } from "./types";

const TRACK_W = 960;
const TRACK_H = 90;
const WAVE_H = 360;
const DEFAULT_DB_LO = -10;
const DEFAULT_DB_HI = 30;
const DEFAULT_LOW_CONF = 0.6;

const TEMPLATE = `
  <div class="error-banner" hidden></div>
  <div class="layout">
    <div class="panels">
      <section class="panel" data-panel="waveform">
        <h3>EEG waveform <span class="epoch-label"></span></h3>
        <canvas class="wave-canvas" width="${TRACK_W}" height="${WAVE_H}"></canvas>
      </section>
      <section class="panel" data-panel="expert_stages">
        <h3>Expert stages</h3>
        <canvas class="expert-canvas" width="${TRACK_W}" height="${TRACK_H}"></canvas>
      </section>
      <section class="panel" data-panel="predicted_stages">
        <h3>Predicted stages (confidence: red low, green high)</h3>
        <canvas class="pred-canvas" width="${TRACK_W}" height="${TRACK_H}"></canvas>
      </section>
      <section class="panel" data-panel="average_spectrogram">
        <h3>Average spectrogram (dB)</h3>
        <canvas class="heatmap-canvas"></canvas>
        <label>dB <input class="db-lo" type="number" value="${DEFAULT_DB_LO}"> to
        <input class="db-hi" type="number" value="${DEFAULT_DB_HI}"></label>
      </section>
    </div>
    <aside class="stats">
      <h2>Sleep statistics</h2>
      <dl class="stats-list"></dl>
      <div class="controls">
        <button class="nav-prev">&#8592; discrepancy</button>
        <button class="nav-next">discrepancy &#8594;</button>
        <span class="wrap-indicator" hidden>wrapped</span>
        <span class="nav-notice" hidden></span>
      </div>
      <div class="low-conf">
        <label>low-confidence threshold
          <input class="conf-threshold" type="number" step="0.05" min="0" max="1"
                 value="${DEFAULT_LOW_CONF}">
        </label>
        <span class="low-conf-count"></span>
        <button class="low-conf-next">next low-confidence</button>
      </div>
    </aside>
  </div>
`;

function ctx2d(canvas: HTMLCanvasElement): Ctx2D | null {
  return canvas.getContext("2d") as unknown as Ctx2D | null;
}

export class App {
  readonly api: ApiClient;
  readonly root: HTMLElement;
  doc: CaseDocument | null = null;
  detail: EpochDetail | null = null;
  selected = 0;
  dbLo = DEFAULT_DB_LO;
  dbHi = DEFAULT_DB_HI;
  lowConfThreshold = DEFAULT_LOW_CONF;
  private detailSeq = 0;

  constructor(root: HTMLElement, api: ApiClient) {
    this.root = root;
    this.api = api;
    root.innerHTML = TEMPLATE;
    this.wire();
  }

  private q<T extends Element>(sel: string): T {
    const el = this.root.querySelector(sel);
    if (!el) throw new Error(`missing element ${sel}`);
    return el as T;
  }

  private wire(): void {
    const clickToEpoch = (ev: MouseEvent, canvas: HTMLCanvasElement) => {
      const rect = canvas.getBoundingClientRect();
      const x = (ev.clientX - rect.left) * (canvas.width / Math.max(1, rect.width || canvas.width));
      if (this.doc) void this.selectEpoch(epochFromClick(x, canvas.width, this.doc.epoch_count));
    };
    for (const sel of [".expert-canvas", ".pred-canvas"]) {
      const canvas = this.q<HTMLCanvasElement>(sel);
      canvas.addEventListener("click", (ev) => clickToEpoch(ev as MouseEvent, canvas));
    }
    this.q<HTMLButtonElement>(".nav-next").addEventListener("click", () => this.jumpDisagreement(1));
    this.q<HTMLButtonElement>(".nav-prev").addEventListener("click", () => this.jumpDisagreement(-1));
    this.q<HTMLButtonElement>(".low-conf-next").addEventListener("click", () => this.jumpLowConfidence());
    this.q<HTMLInputElement>(".conf-threshold").addEventListener("change", (ev) => {
      this.lowConfThreshold = Number((ev.target as HTMLInputElement).value);
      this.renderLowConfidence();
    });
    const onDb = () => {
      this.dbLo = Number(this.q<HTMLInputElement>(".db-lo").value);
      this.dbHi = Number(this.q<HTMLInputElement>(".db-hi").value);
      this.renderDetail();
    };
    this.q<HTMLInputElement>(".db-lo").addEventListener("change", onDb);
    this.q<HTMLInputElement>(".db-hi").addEventListener("change", onDb);
    this.root.addEventListener("keydown", (ev) => this.handleKey(ev as KeyboardEvent));
  }

  async open(caseId: string): Promise<void> {
    const doc = await this.api.getCase(caseId);
    this.renderCase(doc);
    if (doc.state === "done") await this.selectEpoch(this.selected);
  }

  renderCase(doc: CaseDocument): void {
    this.doc = doc;
    const banner = this.q<HTMLElement>(".error-banner");
    if (doc.state === "failed") {
      banner.hidden = false;
      banner.textContent = `scoring failed: ${doc.error ?? "unknown error"}`;
      return;
    }
    banner.hidden = true;
    if (doc.state !== "done" || !doc.result) return;
    const res = doc.result;

    const expertPanel = this.q<HTMLElement>('[data-panel="expert_stages"]');
    const hasExpert = Array.isArray(res.expert_stages);
    expertPanel.hidden = !hasExpert;
    if (hasExpert) {
      const ctx = ctx2d(this.q<HTMLCanvasElement>(".expert-canvas"));
      if (ctx) {
        renderStageTrack(ctx, TRACK_W, TRACK_H, res.expert_stages!);
        markEpoch(ctx, TRACK_W, TRACK_H, this.selected, doc.epoch_count);
      }
    }
    const predCtx = ctx2d(this.q<HTMLCanvasElement>(".pred-canvas"));
    if (predCtx) {
      renderConfidenceTrack(predCtx, TRACK_W, TRACK_H, res.stages, res.confidence);
      markEpoch(predCtx, TRACK_W, TRACK_H, this.selected, doc.epoch_count);
    }
    this.renderStats();
    this.renderLowConfidence();
    this.renderNavNotice();
  }

  // Statistics are pass-throughs: text content is the raw response value.
  private renderStats(): void {
    const report = this.doc?.result?.sleep_report;
    if (!report) return;
    const rows: [string, string, unknown][] = [
      ...Object.entries(report.minutes_per_stage).map(
        ([stage, minutes]): [string, string, unknown] =>
          [`minutes ${stage}`, `minutes.${stage}`, minutes]),
      ["sleep efficiency", "sleep_efficiency", report.sleep_efficiency],
      ["fragmentation /h", "fragmentation_index", report.fragmentation_index],
      ["total sleep min", "total_sleep_min", report.total_sleep_min],
      ["total recording min", "total_recording_min", report.total_recording_min],
    ];
    const dl = this.q<HTMLElement>(".stats-list");
    dl.innerHTML = "";
    for (const [label, key, value] of rows) {
      const dt = document.createElement("dt");
      dt.textContent = label;
      const dd = document.createElement("dd");
      dd.dataset.stat = key;
      dd.textContent = String(value);
      dl.append(dt, dd);
    }
  }

  private renderLowConfidence(): void {
    const res = this.doc?.result;
    if (!res) return;
    const low = lowConfidenceEpochs(res.confidence, this.lowConfThreshold);
    this.q<HTMLElement>(".low-conf-count").textContent =
      `${low.length} epochs below ${this.lowConfThreshold}`;
  }

  private renderNavNotice(): void {
    const notice = this.q<HTMLElement>(".nav-notice");
    const disagreements = this.doc?.result?.disagreements;
    if (disagreements !== undefined && disagreements.length === 0) {
      notice.hidden = false;
      notice.textContent = "no discrepancies";
    } else if (disagreements === undefined) {
      notice.hidden = false;
      notice.textContent = "no expert staging";
    } else {
      notice.hidden = true;
      notice.textContent = "";
    }
  }

  async selectEpoch(t: number): Promise<void> {
    if (!this.doc) return;
    const target = clampEpoch(t, this.doc.epoch_count);
    this.selected = target;
    const seq = ++this.detailSeq;
    try {
      const detail = await this.api.getEpoch(this.doc.case_id, target);
      if (seq !== this.detailSeq) return; // superseded by a newer selection
      this.detail = detail;
      this.renderDetail();
      this.renderCase(this.doc); // refresh epoch markers on the tracks
    } catch (err) {
      if (seq !== this.detailSeq) return;
      const banner = this.q<HTMLElement>(".error-banner");
      banner.hidden = false;
      banner.textContent = `epoch ${target} fetch failed (retry with arrows): ${String(err)}`;
    }
  }

  renderDetail(): void {
    if (!this.detail) return;
    this.q<HTMLElement>(".epoch-label").textContent =
      `epoch ${this.detail.epoch}` +
      (this.detail.stage_pred ? ` — predicted ${this.detail.stage_pred}` : "") +
      (this.detail.stage_expert ? `, expert ${this.detail.stage_expert}` : "");

    const waveCanvas = this.q<HTMLCanvasElement>(".wave-canvas");
    const waveCtx = ctx2d(waveCanvas);
    const channels = this.detail.waveform_b64.map(decodeWaveform);
    if (waveCtx) renderWaveform(waveCtx, waveCanvas.width, waveCanvas.height,
                                channels, this.detail.channels);

    const grid = this.detail.spectrogram_db;
    const heat = this.q<HTMLCanvasElement>(".heatmap-canvas");
    // native grid resolution: 29 columns (sub-epochs) x 257 rows (bins)
    heat.width = grid.length;
    heat.height = grid[0].length;
    heat.dataset.gridCols = String(grid.length);
    heat.dataset.gridRows = String(grid[0].length);
    const heatCtx = ctx2d(heat);
    if (heatCtx) renderHeatmap(heatCtx, grid, this.dbLo, this.dbHi);
  }

  handleKey(ev: KeyboardEvent): void {
    if (ev.key === "ArrowRight") void this.selectEpoch(this.selected + 1);
    else if (ev.key === "ArrowLeft") void this.selectEpoch(this.selected - 1);
  }

  jumpDisagreement(direction: 1 | -1): void {
    const disagreements = this.doc?.result?.disagreements ?? [];
    const nav = nextDisagreement(this.selected, direction, disagreements);
    this.q<HTMLElement>(".wrap-indicator").hidden = !nav.wrapped;
    if (nav.target === null) {
      this.renderNavNotice();
      return;
    }
    void this.selectEpoch(nav.target);
  }

  jumpLowConfidence(): void {
    const res = this.doc?.result;
    if (!res) return;
    const low = lowConfidenceEpochs(res.confidence, this.lowConfThreshold);
    const nav = nextDisagreement(this.selected, 1, low);
    if (nav.target !== null) void this.selectEpoch(nav.target);
  }
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) return;
  const api = new ApiClient("");
  const caseId = new URLSearchParams(window.location.search).get("case");
  if (caseId) {
    const app = new App(root, api);
    await app.open(caseId);
    return;
  }
  // no case selected: render a picker over the service's case list
  const cases = await api.listCases();
  const list = document.createElement("ul");
  for (const c of cases) {
    const li = document.createElement("li");
    const a = document.createElement("a");
    a.href = `?case=${c.case_id}`;
    a.textContent = `${c.case_id} — ${c.filename} [${c.state}]`;
    li.append(a);
    list.append(li);
  }
  root.append(list);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void boot();
}
