import { describe, expect, it } from "vitest";
import { Ctx2D, minMaxBins, renderConfidenceTrack, renderHeatmap,
         renderStageTrack } from "../src/render";
import { confidenceColor } from "../src/color";
import { Stage } from "../src/types";

interface Recorded {
  fills: { x: number; y: number; w: number; h: number; style: string }[];
  images: { width: number; height: number; data: Uint8ClampedArray }[];
}

export function stubCtx(): Ctx2D & { recorded: Recorded } {
  const recorded: Recorded = { fills: [], images: [] };
  return {
    recorded,
    fillStyle: "",
    strokeStyle: "",
    lineWidth: 1,
    clearRect: () => {},
    fillRect(x, y, w, h) {
      recorded.fills.push({ x, y, w, h, style: String(this.fillStyle) });
    },
    beginPath: () => {},
    moveTo: () => {},
    lineTo: () => {},
    stroke: () => {},
    createImageData(w: number, h: number) {
      return { width: w, height: h, data: new Uint8ClampedArray(4 * w * h) } as ImageData;
    },
    putImageData(img: ImageData) {
      recorded.images.push({ width: img.width, height: img.height, data: img.data });
    },
  };
}

describe("min-max envelope binning", () => {
  it("matches a brute-force oracle", () => {
    const samples = Array.from({ length: 100 }, (_, i) => Math.sin(i * 0.7) * (i + 1));
    const nBins = 7;
    const env = minMaxBins(samples, nBins);
    for (let b = 0; b < nBins; b++) {
      const start = Math.floor((b * samples.length) / nBins);
      const end = Math.max(start + 1, Math.floor(((b + 1) * samples.length) / nBins));
      const chunk = samples.slice(start, end);
      expect(env[2 * b]).toBe(Math.min(...chunk));
      expect(env[2 * b + 1]).toBe(Math.max(...chunk));
    }
  });

  it("covers every sample exactly once", () => {
    const samples = [5, -2, 9, 0];
    const env = minMaxBins(samples, 2);
    expect(Array.from(env)).toEqual([-2, 5, 0, 9]);
  });
});

describe("heatmap rendering", () => {
  it("paints one pixel per grid cell at native 29x257 resolution", () => {
    const grid = Array.from({ length: 29 }, () => new Array(257).fill(0));
    const ctx = stubCtx();
    renderHeatmap(ctx, grid, -10, 30);
    expect(ctx.recorded.images).toHaveLength(1);
    expect(ctx.recorded.images[0].width).toBe(29);
    expect(ctx.recorded.images[0].height).toBe(257);
  });

  it("puts low frequencies at the bottom row", () => {
    const grid = Array.from({ length: 29 }, () => new Array(257).fill(-10));
    grid[0][0] = 30; // hottest value at bin 0 of sub-epoch 0
    const ctx = stubCtx();
    renderHeatmap(ctx, grid, -10, 30);
    const img = ctx.recorded.images[0];
    const bottomLeft = 4 * ((257 - 1) * 29 + 0);
    const topLeft = 0;
    expect(img.data[bottomLeft]).not.toBe(img.data[topLeft]);
  });
});

describe("stage tracks", () => {
  const stages: Stage[] = ["W", "N1", "N2", "N2", "R"];

  it("draws one block per epoch", () => {
    const ctx = stubCtx();
    renderStageTrack(ctx, 100, 50, stages);
    expect(ctx.recorded.fills).toHaveLength(stages.length);
  });

  it("colors predicted blocks by the confidence ramp", () => {
    const confidence = [0.0, 0.25, 0.5, 0.75, 1.0];
    const ctx = stubCtx();
    renderConfidenceTrack(ctx, 100, 50, stages, confidence);
    const styles = ctx.recorded.fills.map((f) => f.style);
    expect(styles[0]).toBe(confidenceColor(0.0));
    expect(styles[4]).toBe(confidenceColor(1.0));
    expect(styles[0]).toBe("rgb(255, 0, 0)");
    expect(styles[4]).toBe("rgb(0, 255, 0)");
  });
});
