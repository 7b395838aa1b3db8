/**
 * Trace files and bidirectional playback.
 *
 * A trace is line-delimited JSON: a snapshot event carrying the full
 * initial model, then one event per applied rule with an invertible
 * delta.  The player folds deltas forward exactly like the core's
 * replayer, and additionally records enough history to step backward,
 * so reverse playback visits the same states in the opposite order.
 */

import {
  applyDelta,
  cloneModel,
  DeltaOp,
  Model,
  revertDelta,
} from "./model.js";

export interface TraceEvent {
  step: number;
  kind: string;
  payload: Record<string, any>;
}

export function parseTrace(text: string): TraceEvent[] {
  const events: TraceEvent[] = [];
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (!trimmed) continue;
    const d = JSON.parse(trimmed);
    events.push({ step: d.step, kind: d.kind, payload: d.payload });
  }
  if (events.length === 0 || events[0].kind !== "snapshot") {
    throw new Error("trace must begin with a snapshot event");
  }
  return events;
}

interface HistoryEntry {
  /** delta applied by this event, if any */
  applied?: { step: number; delta: DeltaOp[] };
  /** applied-stack entries a backtrack event reverted, oldest first */
  popped?: { step: number; delta: DeltaOp[] }[];
}

export class Player {
  readonly events: TraceEvent[];
  model: Model;
  /** number of events applied; the snapshot counts as applied */
  pos: number;
  private appliedStack: { step: number; delta: DeltaOp[] }[] = [];
  private history: HistoryEntry[] = [];

  constructor(events: TraceEvent[]) {
    if (events.length === 0 || events[0].kind !== "snapshot") {
      throw new Error("trace must begin with a snapshot event");
    }
    this.events = events;
    this.model = cloneModel(events[0].payload.model as Model);
    this.pos = 0;
  }

  get atEnd(): boolean {
    return this.pos + 1 >= this.events.length;
  }

  get atStart(): boolean {
    return this.pos === 0;
  }

  /** Apply the next event; returns it, or null at the end. */
  forward(): TraceEvent | null {
    if (this.atEnd) return null;
    const ev = this.events[this.pos + 1];
    this.pos += 1;
    const entry: HistoryEntry = {};
    if (ev.kind === "backtrack") {
      const to = ev.payload.to_step as number;
      const popped: { step: number; delta: DeltaOp[] }[] = [];
      while (
        this.appliedStack.length > 0 &&
        this.appliedStack[this.appliedStack.length - 1].step >= to
      ) {
        const top = this.appliedStack.pop()!;
        revertDelta(this.model, top.delta);
        popped.unshift(top);
      }
      entry.popped = popped;
    } else {
      const delta = (ev.payload.delta ?? []) as DeltaOp[];
      if (delta.length > 0) {
        const applied = { step: ev.step, delta };
        this.appliedStack.push(applied);
        applyDelta(this.model, delta);
        entry.applied = applied;
      }
    }
    this.history.push(entry);
    return ev;
  }

  /** Undo the most recently applied event; returns it, or null. */
  back(): TraceEvent | null {
    if (this.atStart) return null;
    const ev = this.events[this.pos];
    const entry = this.history.pop()!;
    if (entry.applied) {
      this.appliedStack.pop();
      revertDelta(this.model, entry.applied.delta);
    }
    if (entry.popped) {
      for (const item of entry.popped) {
        this.appliedStack.push(item);
        applyDelta(this.model, item.delta);
      }
    }
    this.pos -= 1;
    return ev;
  }

  /** Current state as an independent copy. */
  snapshot(): Model {
    return cloneModel(this.model);
  }

  /** Every state from here to the end, inclusive, stepping forward. */
  playForward(): Model[] {
    const out: Model[] = [this.snapshot()];
    while (this.forward() !== null) out.push(this.snapshot());
    return out;
  }

  /** Every state from here back to the start, inclusive. */
  playBackward(): Model[] {
    const out: Model[] = [this.snapshot()];
    while (this.back() !== null) out.push(this.snapshot());
    return out;
  }
}
