/** Point-in-polygon with the boundary-inclusive convention shared with the
 * server: points exactly on an edge or vertex count as inside. */

import type { Vertex } from "./types.js";

const EPS = 1e-12;

export function pointOnSegment(
  px: number, py: number,
  ax: number, ay: number,
  bx: number, by: number,
): boolean {
  const cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
  const scale = Math.max(
    Math.abs(bx - ax), Math.abs(by - ay),
    Math.abs(px - ax), Math.abs(py - ay), 1.0,
  );
  if (Math.abs(cross) > EPS * scale * scale) return false;
  const dot = (px - ax) * (bx - ax) + (py - ay) * (by - ay);
  const sq = (bx - ax) ** 2 + (by - ay) ** 2;
  return dot >= -EPS * scale * scale && dot <= sq + EPS * scale * scale;
}

export function pointInPolygon(x: number, y: number, polygon: Vertex[]): boolean {
  const n = polygon.length;
  if (n < 3) throw new Error("polygon needs at least 3 vertices");
  for (let k = 0; k < n; k++) {
    const [ax, ay] = polygon[k];
    const [bx, by] = polygon[(k + 1) % n];
    if (pointOnSegment(x, y, ax, ay, bx, by)) return true;
  }
  let inside = false;
  for (let k = 0; k < n; k++) {
    const [ax, ay] = polygon[k];
    const [bx, by] = polygon[(k + 1) % n];
    if ((ay > y) !== (by > y)) {
      const xcross = ax + ((y - ay) * (bx - ax)) / (by - ay);
      if (x < xcross) inside = !inside;
    }
  }
  return inside;
}

export function rectToPolygon(x0: number, y0: number, x1: number, y1: number): Vertex[] {
  const lox = Math.min(x0, x1);
  const hix = Math.max(x0, x1);
  const loy = Math.min(y0, y1);
  const hiy = Math.max(y0, y1);
  return [[lox, loy], [hix, loy], [hix, hiy], [lox, hiy]];
}
