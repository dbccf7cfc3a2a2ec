/** Least-squares slope of log(error) against log(h), with R^2. */

export interface RateFit {
  slope: number;
  intercept: number;
  rSquared: number;
  points: number;
}

export function fitLogLog(h: number[], err: number[]): RateFit {
  if (h.length !== err.length) {
    throw new Error("h and error arrays differ in length");
  }
  if (h.length < 3) {
    throw new Error("need at least three points for a rate fit");
  }
  for (let i = 0; i < err.length; i++) {
    if (!(err[i] > 0) || !(h[i] > 0)) {
      throw new Error(`nonpositive value at index ${i}`);
    }
  }
  const lx = h.map(Math.log);
  const ly = err.map(Math.log);
  const n = lx.length;
  const mx = lx.reduce((a, b) => a + b, 0) / n;
  const my = ly.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  const slope = sxy / sxx;
  const intercept = my - slope * mx;
  let ssRes = 0;
  let ssTot = 0;
  for (let i = 0; i < n; i++) {
    const r = ly[i] - (slope * lx[i] + intercept);
    ssRes += r * r;
    ssTot += (ly[i] - my) * (ly[i] - my);
  }
  const rSquared = ssTot <= 1e-30 ? (ssRes <= 1e-30 ? 1 : 0) : 1 - ssRes / ssTot;
  return { slope, intercept, rSquared, points: n };
}

/** Values of a reference power law anchored at the coarsest (first) point. */
export function referenceLine(
  h: number[],
  anchorValue: number,
  slope: number,
): number[] {
  const h0 = h[0];
  return h.map((x) => anchorValue * Math.pow(x / h0, slope));
}
