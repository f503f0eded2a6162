// Color mapping: confidence ramp and the spectrogram dB palette.

// Linear ramp with pure red at p=0 and pure green at p=1.
// Returns unrounded components so the midpoint is exact.
export function confidenceRamp(p: number): [number, number, number] {
  const t = Math.min(1, Math.max(0, p));
  return [255 * (1 - t), 255 * t, 0];
}

export function confidenceColor(p: number): string {
  const [r, g, b] = confidenceRamp(p);
  return `rgb(${Math.round(r)}, ${Math.round(g)}, ${Math.round(b)})`;
}

// Small plasma-like gradient for dB heatmaps.
const DB_STOPS: [number, number, number][] = [
  [13, 8, 135],
  [126, 3, 168],
  [204, 71, 120],
  [248, 149, 64],
  [240, 249, 33],
];

export function dbColor(value: number, loDb: number, hiDb: number): [number, number, number] {
  const t = Math.min(1, Math.max(0, (value - loDb) / (hiDb - loDb)));
  const scaled = t * (DB_STOPS.length - 1);
  const i = Math.min(DB_STOPS.length - 2, Math.floor(scaled));
  const f = scaled - i;
  const a = DB_STOPS[i];
  const b = DB_STOPS[i + 1];
  return [
    a[0] + (b[0] - a[0]) * f,
    a[1] + (b[1] - a[1]) * f,
    a[2] + (b[2] - a[2]) * f,
  ];
}

// Fixed categorical colors for the expert stage track.
export const STAGE_COLORS: Record<string, string> = {
  W: "#e6b422",
  N1: "#7fb2e5",
  N2: "#3b6fb6",
  N3: "#1d3d6e",
  R: "#c065c0",
};
