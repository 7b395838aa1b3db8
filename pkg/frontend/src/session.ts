/**
 * Live stepper session over the line-delimited JSON protocol.
 *
 * The client keeps a local model mirror: it fetches the full model
 * once, then folds the deltas of streamed events so every reply can be
 * rendered without another full state transfer.  `verify()` re-fetches
 * the authoritative model and hash to confirm the mirror is exact.
 */

import { applyDelta, canonicalJson, Model, modelHash } from "./model.js";
import { TraceEvent } from "./trace.js";

/** One in-flight request at a time; replies arrive in order. */
export interface Connection {
  request(payload: Record<string, unknown>): Promise<Record<string, any>>;
  close(): void;
}

export interface StepReply {
  status: string;
  events: TraceEvent[];
}

export class Session {
  private conn: Connection;
  model: Model | null = null;
  status = "unknown";

  constructor(conn: Connection) {
    this.conn = conn;
  }

  /** Fetch the authoritative state and reset the local mirror to it. */
  async sync(): Promise<Model> {
    const reply = await this.conn.request({ cmd: "state" });
    if (reply.error) throw new Error(reply.error);
    this.model = reply.model as Model;
    this.status = reply.status;
    return this.model;
  }

  private absorb(reply: Record<string, any>): StepReply {
    if (reply.error) throw new Error(reply.error);
    this.status = reply.status;
    if (this.model !== null) {
      for (const ev of reply.events as TraceEvent[]) {
        this.applyEvent(ev);
      }
    }
    return reply as StepReply;
  }

  /** Fold one streamed event into the local mirror. */
  applyEvent(ev: TraceEvent): void {
    if (this.model === null) return;
    if (ev.kind === "snapshot") {
      this.model = ev.payload.model as Model;
      return;
    }
    if (ev.kind === "backtrack") {
      // the server rewinds; a mirror without replay history must
      // resync (the reply stream carries no inverse information)
      this.model = null;
      return;
    }
    const delta = ev.payload.delta ?? [];
    applyDelta(this.model, delta);
  }

  async step(): Promise<StepReply> {
    return this.absorb(await this.conn.request({ cmd: "step" }));
  }

  async run(): Promise<StepReply> {
    return this.absorb(await this.conn.request({ cmd: "run" }));
  }

  async backtrack(): Promise<StepReply> {
    const reply = this.absorb(await this.conn.request({ cmd: "backtrack" }));
    await this.sync();
    return reply;
  }

  async reset(): Promise<StepReply> {
    const reply = this.absorb(await this.conn.request({ cmd: "reset" }));
    await this.sync();
    return reply;
  }

  /** Compare the local mirror against the server's model and hash. */
  async verify(): Promise<boolean> {
    const local = this.model;
    const reply = await this.conn.request({ cmd: "state" });
    if (reply.error) throw new Error(reply.error);
    this.status = reply.status;
    if (local === null) {
      this.model = reply.model as Model;
      return true;
    }
    const same =
      canonicalJson(local) === canonicalJson(reply.model) &&
      (await modelHash(local)) === reply.hash;
    this.model = reply.model as Model;
    return same;
  }

  close(): void {
    this.conn.close();
  }
}
