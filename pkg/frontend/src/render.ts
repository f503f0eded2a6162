// Canvas rendering for the four panels. Functions take the minimal 2D
// context surface they use, so tests can pass recording stubs.

import { confidenceColor, dbColor, STAGE_COLORS } from "./color";
import { STAGE_ORDER, Stage } from "./types";

export interface Ctx2D {
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  createImageData(w: number, h: number): ImageData;
  putImageData(img: ImageData, x: number, y: number): void;
}

// Min-max envelope: one (min, max) pair per pixel column.
export function minMaxBins(samples: ArrayLike<number>, nBins: number): Float64Array {
  const out = new Float64Array(2 * nBins);
  const n = samples.length;
  for (let b = 0; b < nBins; b++) {
    const start = Math.floor((b * n) / nBins);
    const end = Math.max(start + 1, Math.floor(((b + 1) * n) / nBins));
    let lo = samples[start];
    let hi = samples[start];
    for (let i = start + 1; i < end; i++) {
      const v = samples[i];
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
    out[2 * b] = lo;
    out[2 * b + 1] = hi;
  }
  return out;
}

// Stacked channel traces drawn as min-max envelopes.
export function renderWaveform(ctx: Ctx2D, width: number, height: number,
                               channels: ArrayLike<number>[], labels: string[]): void {
  ctx.clearRect(0, 0, width, height);
  const lane = height / Math.max(1, channels.length);
  let scale = 1;
  for (const ch of channels) {
    for (let i = 0; i < ch.length; i++) scale = Math.max(scale, Math.abs(ch[i]));
  }
  ctx.strokeStyle = "#274156";
  ctx.lineWidth = 1;
  channels.forEach((ch, c) => {
    const mid = lane * (c + 0.5);
    const env = minMaxBins(ch, width);
    ctx.beginPath();
    for (let x = 0; x < width; x++) {
      const yLo = mid - (env[2 * x] / scale) * (lane * 0.45);
      const yHi = mid - (env[2 * x + 1] / scale) * (lane * 0.45);
      ctx.moveTo(x + 0.5, yLo);
      ctx.lineTo(x + 0.5, yHi);
    }
    ctx.stroke();
  });
}

// Full-night expert track: one categorical block per epoch.
export function renderStageTrack(ctx: Ctx2D, width: number, height: number,
                                 stages: Stage[]): void {
  ctx.clearRect(0, 0, width, height);
  const step = width / stages.length;
  const laneH = height / STAGE_ORDER.length;
  stages.forEach((s, t) => {
    ctx.fillStyle = STAGE_COLORS[s];
    ctx.fillRect(t * step, STAGE_ORDER.indexOf(s) * laneH, Math.ceil(step), laneH);
  });
}

// Predicted track: block per epoch positioned by stage, filled by the
// red-to-green confidence ramp.
export function renderConfidenceTrack(ctx: Ctx2D, width: number, height: number,
                                      stages: Stage[], confidence: number[]): void {
  ctx.clearRect(0, 0, width, height);
  const step = width / stages.length;
  const laneH = height / STAGE_ORDER.length;
  stages.forEach((s, t) => {
    ctx.fillStyle = confidenceColor(confidence[t]);
    ctx.fillRect(t * step, STAGE_ORDER.indexOf(s) * laneH, Math.ceil(step), laneH);
  });
}

// dB heatmap at native grid resolution: one pixel per (sub-epoch, bin),
// 29 columns wide and 257 rows tall, low frequencies at the bottom.
// Display scaling happens via CSS/drawImage after this.
export function renderHeatmap(ctx: Ctx2D, grid: number[][],
                              loDb: number, hiDb: number): void {
  const cols = grid.length;       // 29 sub-epochs
  const rows = grid[0].length;    // 257 frequency bins
  const img = ctx.createImageData(cols, rows);
  for (let s = 0; s < cols; s++) {
    for (let k = 0; k < rows; k++) {
      const [r, g, b] = dbColor(grid[s][k], loDb, hiDb);
      const y = rows - 1 - k;
      const off = 4 * (y * cols + s);
      img.data[off] = Math.round(r);
      img.data[off + 1] = Math.round(g);
      img.data[off + 2] = Math.round(b);
      img.data[off + 3] = 255;
    }
  }
  ctx.putImageData(img, 0, 0);
}

export function markEpoch(ctx: Ctx2D, width: number, height: number,
                          t: number, epochCount: number): void {
  const step = width / epochCount;
  ctx.strokeStyle = "#ff3333";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  ctx.moveTo((t + 0.5) * step, 0);
  ctx.lineTo((t + 0.5) * step, height);
  ctx.stroke();
}
