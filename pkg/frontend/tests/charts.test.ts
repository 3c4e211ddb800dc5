import { describe, expect, it } from "vitest";

import { barChartSvg, heatColor, heatmapSvg, metricCards, scatterSvg } from "../src/charts.js";

describe("heatmap", () => {
  it("renders one rect per cell with row/col metadata", () => {
    const svg = heatmapSvg([
      { row: "solvent_name", col: "TP", value: 0.9 },
      { row: "solvent_name", col: "FP", value: 0.1 },
      { row: "metal_precursor_name", col: "TP", value: 0.8 },
    ]);
    expect(svg.match(/<rect /g)).toHaveLength(3);
    expect(svg).toContain('data-row="solvent_name" data-col="TP"');
    expect(svg).toContain("0.900");
  });

  it("narrowing to one row reduces the heatmap to that row", () => {
    const svg = heatmapSvg([{ row: "only", col: "TP", value: 1 }]);
    expect(svg.match(/<rect /g)).toHaveLength(1);
  });

  it("clamps out-of-range values in the color scale", () => {
    expect(heatColor(2)).toBe("rgb(255,64,0)");
    expect(heatColor(-1)).toBe("rgb(0,64,255)");
  });
});

describe("bar chart", () => {
  it("renders a labelled bar per entry", () => {
    const svg = barChartSvg([
      { label: "f1", value: 0.93 },
      { label: "acc", value: 0.9 },
    ]);
    expect(svg).toContain('data-label="f1"');
    expect(svg).toContain("0.93");
    expect(svg.match(/<rect /g)).toHaveLength(2);
  });
});

describe("scatter", () => {
  it("separates new points from pool points", () => {
    const svg = scatterSvg([
      { x: 0, y: 0, label: "pool-1", kind: "pool" },
      { x: 1, y: 1, label: "new-1", kind: "new" },
    ]);
    expect(svg).toContain('data-kind="pool"');
    expect(svg).toContain('data-kind="new"');
  });

  it("renders an empty frame for no points", () => {
    const svg = scatterSvg([]);
    expect(svg).toContain("<svg");
    expect(svg).not.toContain("<circle");
  });
});

describe("metric cards", () => {
  it("shows server-computed means verbatim", () => {
    const html = metricCards({ f1: 0.93, acc: 0.9, precision: null, recall: 0.947 });
    expect(html).toContain("0.930");
    expect(html).toContain("0.900");
    expect(html).toContain("–"); // absent metric, not zero
  });
});
