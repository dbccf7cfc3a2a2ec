import { describe, expect, it } from "vitest";

import { fitLogLog, referenceLine } from "../src/fit.js";

describe("fitLogLog", () => {
  it("recovers an exact power law", () => {
    const h = [1 / 16, 1 / 32, 1 / 64, 1 / 128];
    const err = h.map((x) => 3.7 * x * x);
    const fit = fitLogLog(h, err);
    expect(fit.slope).toBeCloseTo(2.0, 12);
    expect(fit.rSquared).toBeCloseTo(1.0, 12);
    expect(fit.points).toBe(4);
  });

  it("rejects nonpositive errors with the offending index", () => {
    expect(() => fitLogLog([0.1, 0.05, 0.025], [1, 0, 1])).toThrow(/index 1/);
  });

  it("needs at least three points", () => {
    expect(() => fitLogLog([0.1, 0.05], [1, 0.5])).toThrow(/three/);
  });
});

describe("referenceLine", () => {
  it("anchors at the coarsest point", () => {
    const h = [0.1, 0.05, 0.025];
    const ref = referenceLine(h, 4.0, 2.0);
    expect(ref[0]).toBe(4.0);
    expect(ref[1]).toBeCloseTo(1.0, 12);
    expect(ref[2]).toBeCloseTo(0.25, 12);
  });
});
