import { describe, expect, it } from "vitest";
import { clampEpoch, epochFromClick, lowConfidenceEpochs, nextDisagreement } from "../src/state";

describe("epoch navigation", () => {
  it("clamps into [0, epochCount)", () => {
    expect(clampEpoch(-3, 40)).toBe(0);
    expect(clampEpoch(39, 40)).toBe(39);
    expect(clampEpoch(40, 40)).toBe(39);
    expect(clampEpoch(5, 40)).toBe(5);
  });

  it("maps a click x-position to the epoch under it", () => {
    // epoch 17 of 40 covers x in [408, 432) on a 960px track
    expect(epochFromClick(408, 960, 40)).toBe(17);
    expect(epochFromClick(431, 960, 40)).toBe(17);
    expect(epochFromClick(0, 960, 40)).toBe(0);
    expect(epochFromClick(959, 960, 40)).toBe(39);
  });
});

describe("discrepancy traversal", () => {
  it("finds the smallest disagreement after t going forward", () => {
    expect(nextDisagreement(10, 1, [5, 40])).toEqual({ target: 40, wrapped: false });
  });

  it("wraps forward past the end with an indicator", () => {
    expect(nextDisagreement(50, 1, [5, 40])).toEqual({ target: 5, wrapped: true });
  });

  it("finds the largest disagreement before t going backward", () => {
    expect(nextDisagreement(10, -1, [5, 40])).toEqual({ target: 5, wrapped: false });
    expect(nextDisagreement(3, -1, [5, 40])).toEqual({ target: 40, wrapped: true });
  });

  it("reports nothing to visit for an empty set", () => {
    expect(nextDisagreement(10, 1, [])).toEqual({ target: null, wrapped: false });
  });

  it("visits every member of a set exactly once per cycle", () => {
    const set = [26, 5, 33];
    const visited: number[] = [];
    let t = 0;
    for (let i = 0; i < 3; i++) {
      const nav = nextDisagreement(t, 1, set);
      visited.push(nav.target!);
      t = nav.target!;
    }
    expect(visited).toEqual([5, 26, 33]);
    expect(nextDisagreement(t, 1, set)).toEqual({ target: 5, wrapped: true });
  });
});

describe("low-confidence filter", () => {
  it("collects epochs under the threshold", () => {
    expect(lowConfidenceEpochs([0.9, 0.5, 0.61, 0.3], 0.6)).toEqual([1, 3]);
    expect(lowConfidenceEpochs([0.9, 0.8], 0.6)).toEqual([]);
  });
});
