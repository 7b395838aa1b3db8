/**
 * Exact-rational interpolants for client-side playback.
 *
 * The engine plans bond motions over exact rationals; frames sampled
 * here must therefore agree exactly with core-emitted frame vectors.
 * Fractions are bigint pairs in lowest terms with positive
 * denominator, parsed from the "p/q" strings the core serializes.
 */

export interface Frac {
  readonly n: bigint;
  readonly d: bigint;
}

function gcd(a: bigint, b: bigint): bigint {
  a = a < 0n ? -a : a;
  b = b < 0n ? -b : b;
  while (b) {
    [a, b] = [b, a % b];
  }
  return a;
}

export function frac(n: bigint | number, d: bigint | number = 1n): Frac {
  let nn = BigInt(n);
  let dd = BigInt(d);
  if (dd === 0n) throw new Error("zero denominator");
  if (dd < 0n) {
    nn = -nn;
    dd = -dd;
  }
  const g = gcd(nn, dd) || 1n;
  return { n: nn / g, d: dd / g };
}

export function parseFrac(s: string | number): Frac {
  if (typeof s === "number") {
    if (!Number.isInteger(s)) throw new Error(`non-integer number ${s}`);
    return frac(s);
  }
  const m = /^(-?\d+)(?:\/(\d+))?$/.exec(s.trim());
  if (!m) throw new Error(`bad rational ${JSON.stringify(s)}`);
  return frac(BigInt(m[1]), m[2] ? BigInt(m[2]) : 1n);
}

export function fracToString(f: Frac): string {
  return f.d === 1n ? String(f.n) : `${f.n}/${f.d}`;
}

export const add = (a: Frac, b: Frac): Frac =>
  frac(a.n * b.d + b.n * a.d, a.d * b.d);
export const sub = (a: Frac, b: Frac): Frac =>
  frac(a.n * b.d - b.n * a.d, a.d * b.d);
export const mul = (a: Frac, b: Frac): Frac => frac(a.n * b.n, a.d * b.d);
export const div = (a: Frac, b: Frac): Frac => {
  if (b.n === 0n) throw new Error("division by zero");
  return frac(a.n * b.d, a.d * b.n);
};
export function cmp(a: Frac, b: Frac): number {
  const lhs = a.n * b.d;
  const rhs = b.n * a.d;
  return lhs < rhs ? -1 : lhs > rhs ? 1 : 0;
}
export const eq = (a: Frac, b: Frac): boolean => cmp(a, b) === 0;

export type Vec = Frac[];
export type InterpolantKind = "linear" | "snap";

export interface Interpolant {
  n: number;
  tStart: Frac;
  tEnd: Frac;
  kind: InterpolantKind;
}

export function interpolant(
  n: number,
  kind: InterpolantKind,
  tStart: Frac = frac(0),
  tEnd: Frac = frac(1),
): Interpolant {
  if (cmp(tStart, tEnd) >= 0) throw new Error("t_start must precede t_end");
  return { n, kind, tStart, tEnd };
}

/** Evaluate the path for start x, target y at time t; exact. */
export function at(a: Interpolant, x: Vec, y: Vec, t: Frac): Vec {
  if (x.length !== a.n || y.length !== a.n) {
    throw new Error("vector arity mismatch");
  }
  if (cmp(t, a.tStart) < 0 || cmp(t, a.tEnd) > 0) {
    throw new Error("time outside duration");
  }
  const run = sub(t, a.tStart);
  const span = sub(a.tEnd, a.tStart);
  const w =
    a.kind === "linear"
      ? div(run, span)
      : div(mul(run, add(run, frac(1))), mul(span, add(span, frac(1))));
  return x.map((xi, i) => add(xi, mul(w, sub(y[i], xi))));
}

/** k equally spaced sample times covering the duration. */
export function sampleTimes(a: Interpolant, k: number): Frac[] {
  if (k < 2) throw new Error("need at least 2 samples");
  const span = sub(a.tEnd, a.tStart);
  const out: Frac[] = [];
  for (let j = 0; j < k; j++) {
    out.push(add(a.tStart, mul(frac(j, k - 1), span)));
  }
  return out;
}

export interface MotionPlan {
  animation: Interpolant;
  x: Vec;
  y: Vec;
}

export function frames(plan: MotionPlan, k: number): Vec[] {
  return sampleTimes(plan.animation, k).map((t) =>
    at(plan.animation, plan.x, plan.y, t),
  );
}

/** Swap start and target: pure reverse playback of the motion. */
export function reversePlan(plan: MotionPlan): MotionPlan {
  return { animation: plan.animation, x: plan.y, y: plan.x };
}
