/** Exact interpolants, tested against core-emitted frame vectors. */

import { describe, expect, it } from "vitest";

import {
  at,
  cmp,
  frac,
  fracToString,
  frames,
  interpolant,
  parseFrac,
  sampleTimes,
} from "../src/anim.js";
import { fixedDecimal } from "../src/render/solids.js";
import { corePlanFixture } from "./helpers.js";

/** Small deterministic generator (64-bit LCG) for rational fuzzing. */
function lcg(seed: bigint) {
  let s = seed;
  return () => {
    s = (s * 6364136223846793005n + 1442695040888963407n) & 0xffffffffffffffffn;
    return Number(s >> 33n);
  };
}

describe("interpolants", () => {
  it("hit the boundary vectors exactly on random rationals", () => {
    const next = lcg(20240825n);
    for (let trial = 0; trial < 100; trial++) {
      const n = (next() % 8) + 1;
      const rnd = () => frac((next() % 17) - 8, (next() % 6) + 1);
      const x = Array.from({ length: n }, rnd);
      const y = Array.from({ length: n }, rnd);
      const ts = rnd();
      const te = { n: ts.n * ts.d + ts.d * ts.d, d: ts.d * ts.d }; // ts + 1
      for (const kind of ["linear", "snap"] as const) {
        const a = interpolant(n, kind, ts, frac(te.n, te.d));
        expect(at(a, x, y, a.tStart)).toEqual(x);
        expect(at(a, x, y, a.tEnd)).toEqual(y);
      }
    }
  });

  it("snap reaches 3/8 at the middle and lags linear throughout", () => {
    const lin = interpolant(1, "linear");
    const snap = interpolant(1, "snap");
    const x = [frac(0)];
    const y = [frac(1)];
    expect(at(snap, x, y, frac(1, 2))).toEqual([frac(3, 8)]);
    for (const t of sampleTimes(lin, 32).slice(1, -1)) {
      const [ws] = at(snap, x, y, t);
      const [wl] = at(lin, x, y, t);
      expect(cmp(ws, wl)).toBeLessThan(0);
    }
  });

  it("rejects malformed arguments", () => {
    expect(() => interpolant(1, "linear", frac(1), frac(1))).toThrow();
    const a = interpolant(2, "linear");
    expect(() => at(a, [frac(0)], [frac(1), frac(1)], frac(0))).toThrow();
    expect(() => at(a, [frac(0), frac(0)], [frac(1), frac(1)], frac(2))).toThrow();
    expect(() => parseFrac("1/0")).toThrow();
    expect(() => parseFrac("x")).toThrow();
  });
});

describe("parity with core-emitted frames", () => {
  it("reproduces a core snap plan sample for sample", () => {
    const core = corePlanFixture();
    const plan = {
      animation: interpolant(core.x.length, core.kind as "snap"),
      x: core.x.map(parseFrac),
      y: core.y.map(parseFrac),
    };
    const got = frames(plan, core.samples.length).map((v) =>
      v.map(fracToString),
    );
    expect(got).toEqual(core.samples);
  });
});

describe("fixed-decimal formatting", () => {
  it("matches the core convention (round half away from zero)", () => {
    expect(fixedDecimal("12345/10000")).toBe("1.2345");
    expect(fixedDecimal("1/3")).toBe("0.3333");
    expect(fixedDecimal("1/6", 2)).toBe("0.17");
    expect(fixedDecimal("1/8", 2)).toBe("0.13");
    expect(fixedDecimal("-1/8", 2)).toBe("-0.13");
    expect(fixedDecimal("-5/10000")).toBe("-0.0005");
    expect(fixedDecimal("3/2", 0)).toBe("2");
    expect(fixedDecimal(0)).toBe("0.0000");
  });
});
