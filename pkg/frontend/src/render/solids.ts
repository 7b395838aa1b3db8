/**
 * Solid geometry rendering from model state.
 *
 * Solid geometry arrives as exact rational strings; coordinates are
 * printed in fixed decimals (round half away from zero) so identical
 * states render byte-identically, matching the core's SVG convention.
 */

import { Frac, parseFrac } from "../anim.js";
import { Model } from "../model.js";

export type GeomPoly = [boolean, [string | number, string | number][]];

export interface SolidGeometry {
  polys: GeomPoly[];
  edges: Record<string, [[string, string], [string, string]]>;
}

/** Fixed-point rendering of an exact rational, half away from zero. */
export function fixedDecimal(value: Frac | string | number, places = 4): string {
  const f: Frac =
    typeof value === "object" ? value : parseFrac(value as string | number);
  const q = 10n ** BigInt(places);
  let n = f.n * q;
  const d = f.d;
  const sign = n < 0n ? "-" : "";
  if (n < 0n) n = -n;
  let whole = n / d;
  const rem = n % d;
  if (2n * rem >= d) whole += 1n;
  if (places === 0) return `${sign}${whole}`;
  const int = whole / q;
  const fracPart = (whole % q).toString().padStart(places, "0");
  return `${sign}${int}.${fracPart}`;
}

function pathOf(points: [string | number, string | number][], places: number): string {
  const cmds = points.map(
    ([x, y], i) =>
      `${i === 0 ? "M" : "L"}${fixedDecimal(x, places)} ${fixedDecimal(y, places)}`,
  );
  return cmds.join(" ") + " Z";
}

/** SVG path data for one solid's geometry (holes included, even-odd). */
export function solidPaths(geom: SolidGeometry, places = 4): string[] {
  return geom.polys.map(([, points]) => pathOf(points, places));
}

/** Render every live solid of a model into one SVG document. */
export function renderSolidsSvg(
  model: Model,
  width = 640,
  height = 480,
  places = 4,
): string {
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
      `height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<g transform="translate(24 ${height - 24}) scale(20 -20)">`,
  ];
  const iids = Object.keys(model.solids)
    .map(Number)
    .sort((a, b) => a - b);
  for (const iid of iids) {
    const rec = model.solids[String(iid)];
    if (!rec.alive || !rec.geom) continue;
    const geom = rec.geom as SolidGeometry;
    const d = solidPaths(geom, places).join(" ");
    if (!d) continue;
    parts.push(
      `<path data-solid="${iid}" d="${d}" fill-rule="evenodd" ` +
        `fill="#ddd" stroke="#222" stroke-width="0.05"/>`,
    );
  }
  parts.push("</g>", "</svg>");
  return parts.join("\n");
}
