/**
 * Engine model mirror: the JSON state image and invertible delta
 * application.  This reimplements, operation for operation, the trace
 * replay the core performs, so the UI can reconstruct every
 * intermediate state from a trace or from streamed events without
 * re-executing anything.
 */

export interface TermRecord {
  tid: number;
  kind: string;
  net: number | null;
  died?: boolean;
}

export interface CellRecord {
  cid: number;
  type: "func" | "call" | "solid";
  name?: string;
  root?: number;
  args?: number[];
  terminals?: number[];
  negated?: boolean;
  priority?: number[];
  instance?: number;
  edges?: Record<string, number>;
  terms?: TermRecord[];
}

export interface SolidRecord {
  family: string | null;
  children: number[];
  combinator: string | null;
  alive: boolean;
  geom: unknown;
}

export interface Model {
  cells: Record<string, CellRecord>;
  nets: Record<string, number[]>;
  bonds: Record<string, [number, number]>;
  bindings: Record<string, unknown>;
  solids: Record<string, SolidRecord>;
}

export type DeltaOp = Record<string, any> & { op: string };

export function cloneModel(model: Model): Model {
  return JSON.parse(JSON.stringify(model)) as Model;
}

const SIMPLE = "simple";

function insertCell(model: Model, rec: CellRecord): void {
  const c: CellRecord = { ...rec };
  const terms = c.terms ?? [];
  delete c.terms;
  model.cells[String(c.cid)] = c;
  for (const t of terms) {
    if (t.kind === SIMPLE && t.net !== null && t.net !== undefined) {
      const key = String(t.net);
      if (t.died) {
        model.nets[key] = [t.tid];
      } else {
        const members = (model.nets[key] ??= []);
        if (!members.includes(t.tid)) {
          members.push(t.tid);
          members.sort((a, b) => a - b);
        }
      }
    }
  }
}

function extractCell(model: Model, rec: CellRecord): void {
  delete model.cells[String(rec.cid)];
  for (const t of rec.terms ?? []) {
    if (t.kind === SIMPLE && t.net !== null && t.net !== undefined) {
      const key = String(t.net);
      const members = (model.nets[key] ?? []).filter((x) => x !== t.tid);
      if (members.length > 0) {
        model.nets[key] = members;
      } else {
        delete model.nets[key];
      }
    }
  }
}

/** Apply one delta operation in place (inverse=true undoes it). */
export function applyOp(model: Model, op: DeltaOp, inverse: boolean): void {
  const { cells, nets, bonds, solids } = model;
  switch (op.op) {
    case "cell_add":
      inverse ? extractCell(model, op.cell) : insertCell(model, op.cell);
      break;
    case "cell_remove":
      inverse ? insertCell(model, op.cell) : extractCell(model, op.cell);
      break;
    case "net_union": {
      const kept = String(op.kept);
      const removed = String(op.removed);
      if (!inverse) {
        nets[kept] = [...nets[kept], ...op.moved].sort((a, b) => a - b);
        delete nets[removed];
      } else {
        nets[removed] = [...op.moved].sort((a: number, b: number) => a - b);
        const moved = new Set<number>(op.moved);
        nets[kept] = nets[kept].filter((t) => !moved.has(t));
      }
      break;
    }
    case "bond_add":
      if (!inverse) bonds[String(op.bid)] = [op.a, op.b];
      else delete bonds[String(op.bid)];
      break;
    case "bond_remove":
      if (!inverse) delete bonds[String(op.bid)];
      else bonds[String(op.bid)] = [op.a, op.b];
      break;
    case "bind": {
      const value = inverse ? op.old : op.new;
      if (value === null || value === undefined) {
        delete model.bindings[op.name];
      } else {
        model.bindings[op.name] = value;
      }
      break;
    }
    case "fuse":
      if (!inverse) {
        for (const rec of op.removed) delete cells[String(rec.cid)];
        const c: CellRecord = { ...op.new_cell };
        delete c.terms;
        cells[String(c.cid)] = c;
      } else {
        delete cells[String(op.new_cell.cid)];
        for (const rec of op.removed) {
          const c: CellRecord = { ...rec };
          delete c.terms;
          cells[String(c.cid)] = c;
        }
      }
      break;
    case "edges_del": {
      const cell = cells[String(op.cid)];
      for (const [nm, t] of op.removed as [string, number][]) {
        if (!inverse) delete cell.edges![nm];
        else cell.edges![nm] = t;
      }
      break;
    }
    case "solid_add":
      if (!inverse) {
        solids[String(op.iid)] = {
          family: op.family,
          children: op.children,
          combinator: op.combinator,
          alive: true,
          geom: null,
        };
      } else {
        delete solids[String(op.iid)];
      }
      break;
    case "solid_kill":
      solids[String(op.iid)].alive = inverse;
      break;
    case "solid_kill_geom":
      solids[String(op.iid)].geom = inverse ? op.old : null;
      break;
    case "geom":
      solids[String(op.iid)].geom = inverse ? op.old : op.new;
      break;
    default:
      throw new Error(`unknown delta op ${op.op}`);
  }
}

export function applyDelta(model: Model, delta: DeltaOp[]): void {
  for (const op of delta) applyOp(model, op, false);
}

export function revertDelta(model: Model, delta: DeltaOp[]): void {
  for (let i = delta.length - 1; i >= 0; i--) applyOp(model, delta[i], true);
}

// ---------------------------------------------------------------------------
// canonical serialization and hashing (byte-identical to the core)

function escapeAscii(s: string): string {
  let out = "";
  for (const ch of s) {
    const code = ch.codePointAt(0)!;
    if (code < 0x20) {
      switch (ch) {
        case "\b": out += "\\b"; break;
        case "\t": out += "\\t"; break;
        case "\n": out += "\\n"; break;
        case "\f": out += "\\f"; break;
        case "\r": out += "\\r"; break;
        default: out += "\\u" + code.toString(16).padStart(4, "0");
      }
    } else if (ch === '"') {
      out += '\\"';
    } else if (ch === "\\") {
      out += "\\\\";
    } else if (code < 0x7f) {
      out += ch;
    } else if (code <= 0xffff) {
      out += "\\u" + code.toString(16).padStart(4, "0");
    } else {
      const v = code - 0x10000;
      const hi = 0xd800 + (v >> 10);
      const lo = 0xdc00 + (v & 0x3ff);
      out += "\\u" + hi.toString(16).padStart(4, "0");
      out += "\\u" + lo.toString(16).padStart(4, "0");
    }
  }
  return out;
}

/** Compact, key-sorted, ASCII-escaped JSON, matching the core's form. */
export function canonicalJson(value: unknown): string {
  if (value === null || value === undefined) return "null";
  if (typeof value === "boolean") return value ? "true" : "false";
  if (typeof value === "number") {
    if (!Number.isFinite(value)) throw new Error("non-finite number");
    return Number.isInteger(value) ? String(value) : JSON.stringify(value);
  }
  if (typeof value === "string") return `"${escapeAscii(value)}"`;
  if (Array.isArray(value)) {
    return `[${value.map(canonicalJson).join(",")}]`;
  }
  const obj = value as Record<string, unknown>;
  const keys = Object.keys(obj).sort();
  const parts = keys.map((k) => `"${escapeAscii(k)}":${canonicalJson(obj[k])}`);
  return `{${parts.join(",")}}`;
}

export async function modelHash(model: Model): Promise<string> {
  const { createHash } = await import("node:crypto");
  return createHash("sha256").update(canonicalJson(model), "utf8").digest("hex");
}
