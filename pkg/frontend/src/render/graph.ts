/**
 * Deterministic SVG rendering of the specification graph.
 *
 * Cells are laid out on a fixed grid in cid order: function cells as
 * rectangles, invocation cells as rounded boxes (negated ones carry
 * two crossing strokes), solid cells as hexagons.  Wires join cell
 * centers per shared net.  The output depends only on the model, so
 * identical states render to identical documents.
 */

import { CellRecord, Model } from "../model.js";

export interface LiteralTally {
  positive: number;
  crossed: number;
}

/** Count positive and crossed (negated) invocations of one design. */
export function countLiterals(model: Model, designName: string): LiteralTally {
  let positive = 0;
  let crossed = 0;
  for (const cell of Object.values(model.cells)) {
    if (cell.type === "call" && cell.name === designName) {
      if (cell.negated) crossed += 1;
      else positive += 1;
    }
  }
  return { positive, crossed };
}

const CELL_W = 96;
const CELL_H = 40;
const GAP_X = 36;
const GAP_Y = 48;
const COLS = 6;
const MARGIN = 24;

interface Placed {
  cell: CellRecord;
  x: number;
  y: number;
}

function layout(model: Model): Map<number, Placed> {
  const cids = Object.values(model.cells)
    .map((c) => c.cid)
    .sort((a, b) => a - b);
  const placed = new Map<number, Placed>();
  cids.forEach((cid, i) => {
    const col = i % COLS;
    const row = Math.floor(i / COLS);
    placed.set(cid, {
      cell: model.cells[String(cid)],
      x: MARGIN + col * (CELL_W + GAP_X),
      y: MARGIN + row * (CELL_H + GAP_Y),
    });
  });
  return placed;
}

function cellTerminals(cell: CellRecord): number[] {
  if (cell.type === "func") return [cell.root!, ...(cell.args ?? [])];
  if (cell.type === "call") return cell.terminals ?? [];
  return Object.values(cell.edges ?? {});
}

function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderGraphSvg(model: Model): string {
  const placed = layout(model);
  const n = placed.size;
  const rows = Math.max(1, Math.ceil(n / COLS));
  const width = MARGIN * 2 + COLS * CELL_W + (COLS - 1) * GAP_X;
  const height = MARGIN * 2 + rows * CELL_H + (rows - 1) * GAP_Y;

  const owner = new Map<number, number>(); // terminal -> cid
  for (const { cell } of placed.values()) {
    for (const tid of cellTerminals(cell)) owner.set(tid, cell.cid);
  }

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
      `height="${height}" viewBox="0 0 ${width} ${height}">`,
  );

  // wires first (under the cells): connect the owning cells of each net
  const netIds = Object.keys(model.nets)
    .map(Number)
    .sort((a, b) => a - b);
  for (const nid of netIds) {
    const cids = [
      ...new Set(
        model.nets[String(nid)]
          .map((tid) => owner.get(tid))
          .filter((c): c is number => c !== undefined),
      ),
    ].sort((a, b) => a - b);
    for (let i = 1; i < cids.length; i++) {
      const a = placed.get(cids[0])!;
      const b = placed.get(cids[i])!;
      parts.push(
        `<line class="wire" data-net="${nid}" ` +
          `x1="${a.x + CELL_W / 2}" y1="${a.y + CELL_H / 2}" ` +
          `x2="${b.x + CELL_W / 2}" y2="${b.y + CELL_H / 2}" ` +
          `stroke="#888" stroke-width="1"/>`,
      );
    }
  }

  // bonds as dashed strokes between the owning cells
  const bondIds = Object.keys(model.bonds)
    .map(Number)
    .sort((a, b) => a - b);
  for (const bid of bondIds) {
    const [ta, tb] = model.bonds[String(bid)];
    const ca = owner.get(ta);
    const cb = owner.get(tb);
    if (ca === undefined || cb === undefined) continue;
    const a = placed.get(ca)!;
    const b = placed.get(cb)!;
    parts.push(
      `<line class="bond" data-bond="${bid}" ` +
        `x1="${a.x + CELL_W / 2}" y1="${a.y + CELL_H / 2}" ` +
        `x2="${b.x + CELL_W / 2}" y2="${b.y + CELL_H / 2}" ` +
        `stroke="#c60" stroke-width="2" stroke-dasharray="6 3"/>`,
    );
  }

  for (const { cell, x, y } of [...placed.values()].sort(
    (a, b) => a.cell.cid - b.cell.cid,
  )) {
    const label = esc(cell.name ?? `solid#${cell.instance}`);
    const cls = cell.type + (cell.negated ? " negated" : "");
    if (cell.type === "call") {
      parts.push(
        `<rect class="${cls}" data-cid="${cell.cid}" x="${x}" y="${y}" ` +
          `width="${CELL_W}" height="${CELL_H}" rx="12" ` +
          `fill="#eef" stroke="#336"/>`,
      );
      if (cell.negated) {
        parts.push(
          `<line class="cross" x1="${x}" y1="${y}" ` +
            `x2="${x + CELL_W}" y2="${y + CELL_H}" stroke="#900" stroke-width="2"/>`,
          `<line class="cross" x1="${x + CELL_W}" y1="${y}" ` +
            `x2="${x}" y2="${y + CELL_H}" stroke="#900" stroke-width="2"/>`,
        );
      }
    } else if (cell.type === "func") {
      parts.push(
        `<rect class="${cls}" data-cid="${cell.cid}" x="${x}" y="${y}" ` +
          `width="${CELL_W}" height="${CELL_H}" fill="#fff" stroke="#333"/>`,
      );
    } else {
      parts.push(
        `<rect class="${cls}" data-cid="${cell.cid}" x="${x}" y="${y}" ` +
          `width="${CELL_W}" height="${CELL_H}" fill="#efe" stroke="#363"/>`,
      );
    }
    parts.push(
      `<text x="${x + CELL_W / 2}" y="${y + CELL_H / 2 + 4}" ` +
        `font-family="monospace" font-size="12" text-anchor="middle">` +
        `${label}</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("\n");
}
