/**
 * TCP transport for the stepper protocol (node environments).
 *
 * The wire format is one JSON object per line in each direction, with
 * at most one request in flight.  Browser builds would substitute a
 * WebSocket bridge implementing the same Connection interface.
 */

import { createConnection, Socket } from "node:net";
import { Connection } from "./session.js";

export function connectTcp(
  host: string,
  port: number,
  timeoutMs = 10_000,
): Promise<Connection> {
  return new Promise((resolve, reject) => {
    const sock: Socket = createConnection({ host, port }, () => {
      resolve(wrap(sock, timeoutMs));
    });
    sock.once("error", reject);
  });
}

function wrap(sock: Socket, timeoutMs: number): Connection {
  let buffer = "";
  const pending: {
    resolve: (v: Record<string, any>) => void;
    reject: (e: Error) => void;
  }[] = [];

  sock.setEncoding("utf8");
  sock.on("data", (chunk: string) => {
    buffer += chunk;
    let idx: number;
    while ((idx = buffer.indexOf("\n")) >= 0) {
      const line = buffer.slice(0, idx).trim();
      buffer = buffer.slice(idx + 1);
      if (!line) continue;
      const waiter = pending.shift();
      if (!waiter) continue;
      try {
        waiter.resolve(JSON.parse(line));
      } catch (e) {
        waiter.reject(e as Error);
      }
    }
  });
  sock.on("close", () => {
    while (pending.length > 0) {
      pending.shift()!.reject(new Error("connection closed"));
    }
  });

  return {
    request(payload: Record<string, unknown>): Promise<Record<string, any>> {
      return new Promise((resolve, reject) => {
        const timer = setTimeout(
          () => reject(new Error("request timed out")),
          timeoutMs,
        );
        pending.push({
          resolve: (v) => {
            clearTimeout(timer);
            resolve(v);
          },
          reject: (e) => {
            clearTimeout(timer);
            reject(e);
          },
        });
        sock.write(JSON.stringify(payload) + "\n");
      });
    },
    close(): void {
      sock.end();
      sock.destroy();
    },
  };
}
