// View-state helpers: epoch navigation, discrepancy traversal, filters.
// Pure functions so the contract is testable without a DOM.

export interface NavResult {
  target: number | null; // null when there is nothing to visit
  wrapped: boolean;
}

export function clampEpoch(t: number, epochCount: number): number {
  if (epochCount <= 0) return 0;
  return Math.min(epochCount - 1, Math.max(0, t));
}

// Map a click x-position on a full-night track to an epoch index.
export function epochFromClick(x: number, width: number, epochCount: number): number {
  if (width <= 0) return 0;
  return clampEpoch(Math.floor((x / width) * epochCount), epochCount);
}

// Smallest disagreement index > t going forward (largest < t going
// backward); wraps around with an indicator when past the end.
export function nextDisagreement(current: number, direction: 1 | -1,
                                 disagreements: number[]): NavResult {
  if (disagreements.length === 0) return { target: null, wrapped: false };
  const sorted = [...disagreements].sort((a, b) => a - b);
  if (direction === 1) {
    for (const d of sorted) {
      if (d > current) return { target: d, wrapped: false };
    }
    return { target: sorted[0], wrapped: true };
  }
  for (let i = sorted.length - 1; i >= 0; i--) {
    if (sorted[i] < current) return { target: sorted[i], wrapped: false };
  }
  return { target: sorted[sorted.length - 1], wrapped: true };
}

export function lowConfidenceEpochs(confidence: number[], threshold: number): number[] {
  const out: number[] = [];
  confidence.forEach((c, t) => {
    if (c < threshold) out.push(t);
  });
  return out;
}
