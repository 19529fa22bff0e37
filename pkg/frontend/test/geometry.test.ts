import { describe, expect, it } from "vitest";

import { pointInPolygon, rectToPolygon } from "../src/geometry.js";
import type { Vertex } from "../src/types.js";

const square: Vertex[] = [[0, 0], [4, 0], [4, 4], [0, 4]];

describe("pointInPolygon", () => {
  it("classifies interior and exterior points", () => {
    expect(pointInPolygon(2, 2, square)).toBe(true);
    expect(pointInPolygon(5, 2, square)).toBe(false);
    expect(pointInPolygon(-0.001, 2, square)).toBe(false);
  });

  it("counts the boundary as inside, matching the server convention", () => {
    expect(pointInPolygon(0, 0, square)).toBe(true);   // vertex
    expect(pointInPolygon(2, 0, square)).toBe(true);   // edge midpoint
    expect(pointInPolygon(4, 4, square)).toBe(true);
    expect(pointInPolygon(4, 2, square)).toBe(true);
  });

  it("handles concave polygons", () => {
    const concave: Vertex[] = [[0, 0], [6, 0], [6, 6], [3, 3], [0, 6]];
    expect(pointInPolygon(3, 1, concave)).toBe(true);
    expect(pointInPolygon(3, 5, concave)).toBe(false);  // inside the notch
    expect(pointInPolygon(3, 3, concave)).toBe(true);   // notch vertex
  });

  it("rejects degenerate polygons", () => {
    expect(() => pointInPolygon(0, 0, [[0, 0], [1, 1]])).toThrow();
  });
});

describe("rectToPolygon", () => {
  it("normalizes corner order", () => {
    expect(rectToPolygon(4, 5, 1, 2)).toEqual([[1, 2], [4, 2], [4, 5], [1, 5]]);
  });
});
