/** Test fixtures generated by driving the installed core CLI. */

import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { Model } from "../src/model.js";
import { parseTrace, TraceEvent } from "../src/trace.js";

export const PYTHON = process.env.LSD_PYTHON ?? "python3";

export interface Fixture {
  events: TraceEvent[];
  states: Model[];
}

const cache = new Map<string, Fixture>();

function cli(args: string[]): string {
  return execFileSync(PYTHON, ["-m", "lsd.cli", ...args], {
    encoding: "utf8",
    maxBuffer: 256 * 1024 * 1024,
  });
}

/** Trace plus the core's per-event replayed model dumps for a query. */
export function fixture(query: string): Fixture {
  const hit = cache.get(query);
  if (hit) return hit;
  const dir = mkdtempSync(join(tmpdir(), "lsd-ui-"));
  const tracePath = join(dir, `${query}.jsonl`);
  const statesPath = join(dir, `${query}-states.jsonl`);
  cli(["run", "--corpus", "--query", query, "--trace", tracePath]);
  cli(["replay", tracePath, "--dump-states", statesPath]);
  const events = parseTrace(readFileSync(tracePath, "utf8"));
  const states = readFileSync(statesPath, "utf8")
    .split("\n")
    .filter((ln) => ln.trim().length > 0)
    .map((ln) => JSON.parse(ln) as Model);
  const out = { events, states };
  cache.set(query, out);
  return out;
}

/** Run a one-off core script and parse its JSON stdout. */
export function corePlanFixture(): {
  kind: string;
  x: string[];
  y: string[];
  samples: string[][];
} {
  const script = [
    "import json",
    "from fractions import Fraction as F",
    "from lsd.anim import plan_bond_animation",
    "from lsd.solids import SolidStore",
    "st = SolidStore()",
    "a = st.new_instance('square', [F(0), F(2), F(0), F(0)])",
    "b = st.new_instance('square', [F(5), F(1), F(5), F(3)])",
    "plan = plan_bond_animation(st, a, 'edge', b, 'edge', kind='snap')",
    "samples = [[str(v) for v in plan.at(t)] for t in plan.times(8)]",
    "print(json.dumps({'kind': 'snap',",
    "                  'x': [str(v) for v in plan.x],",
    "                  'y': [str(v) for v in plan.y],",
    "                  'samples': samples}))",
  ].join("\n");
  return JSON.parse(execFileSync(PYTHON, ["-c", script], { encoding: "utf8" }));
}
