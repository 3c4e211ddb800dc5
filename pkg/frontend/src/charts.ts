/** Minimal SVG chart builders. Inputs arrive server-shaped; nothing here
 * aggregates or recomputes metrics. */

export interface HeatmapCell {
  row: string;
  col: string;
  value: number; // 0..1
}

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");

/** Blue-to-red scale for a 0..1 value. */
export function heatColor(value: number): string {
  const clamped = Math.max(0, Math.min(1, value));
  const red = Math.round(255 * clamped);
  const blue = Math.round(255 * (1 - clamped));
  return `rgb(${red},64,${blue})`;
}

export function heatmapSvg(cells: HeatmapCell[], cellSize = 28): string {
  const rows = [...new Set(cells.map((c) => c.row))];
  const cols = [...new Set(cells.map((c) => c.col))];
  const left = 170;
  const top = 20;
  const width = left + cols.length * cellSize + 10;
  const height = top + rows.length * cellSize + 10;
  const parts = [
    `<svg class="heatmap" viewBox="0 0 ${width} ${height}" xmlns="http://www.w3.org/2000/svg">`,
  ];
  cols.forEach((col, j) => {
    parts.push(
      `<text x="${left + j * cellSize + cellSize / 2}" y="${top - 6}" text-anchor="middle" class="axis">${esc(col)}</text>`,
    );
  });
  rows.forEach((row, i) => {
    parts.push(
      `<text x="${left - 6}" y="${top + i * cellSize + cellSize / 2 + 4}" text-anchor="end" class="axis">${esc(row)}</text>`,
    );
  });
  for (const cell of cells) {
    const i = rows.indexOf(cell.row);
    const j = cols.indexOf(cell.col);
    parts.push(
      `<rect data-row="${esc(cell.row)}" data-col="${esc(cell.col)}" x="${left + j * cellSize}" ` +
        `y="${top + i * cellSize}" width="${cellSize - 2}" height="${cellSize - 2}" ` +
        `fill="${heatColor(cell.value)}"><title>${esc(cell.row)} / ${esc(cell.col)}: ${cell.value.toFixed(3)}</title></rect>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}

export interface Bar {
  label: string;
  value: number; // 0..1
}

export function barChartSvg(bars: Bar[], width = 420, barHeight = 18): string {
  const left = 170;
  const height = bars.length * (barHeight + 6) + 10;
  const parts = [
    `<svg class="bars" viewBox="0 0 ${width} ${height}" xmlns="http://www.w3.org/2000/svg">`,
  ];
  bars.forEach((bar, i) => {
    const y = 5 + i * (barHeight + 6);
    const w = Math.max(0, Math.min(1, bar.value)) * (width - left - 50);
    parts.push(
      `<text x="${left - 6}" y="${y + barHeight - 4}" text-anchor="end" class="axis">${esc(bar.label)}</text>`,
      `<rect data-label="${esc(bar.label)}" x="${left}" y="${y}" width="${w}" height="${barHeight}" fill="#3b6ea5"></rect>`,
      `<text x="${left + w + 4}" y="${y + barHeight - 4}" class="value">${bar.value.toFixed(2)}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("");
}

export interface ScatterPoint {
  x: number;
  y: number;
  label: string;
  kind: "new" | "pool";
}

/** Similarity scatter: new paragraphs in red, pool members in black. The 2-D
 * positions come from the server report; no projection happens here. */
export function scatterSvg(points: ScatterPoint[], size = 360): string {
  const parts = [
    `<svg class="scatter" viewBox="0 0 ${size} ${size}" xmlns="http://www.w3.org/2000/svg">`,
    `<rect x="0" y="0" width="${size}" height="${size}" fill="#fafafa" stroke="#ccc"/>`,
  ];
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const span = (values: number[]) => {
    const lo = Math.min(...values);
    const hi = Math.max(...values);
    return hi > lo ? ([lo, hi] as const) : ([lo - 1, hi + 1] as const);
  };
  if (points.length) {
    const [x0, x1] = span(xs);
    const [y0, y1] = span(ys);
    for (const p of points) {
      const cx = 15 + ((p.x - x0) / (x1 - x0)) * (size - 30);
      const cy = size - 15 - ((p.y - y0) / (y1 - y0)) * (size - 30);
      const fill = p.kind === "new" ? "#c0392b" : "#222";
      parts.push(
        `<circle data-kind="${p.kind}" cx="${cx.toFixed(1)}" cy="${cy.toFixed(1)}" r="5" fill="${fill}">` +
          `<title>${esc(p.label)}</title></circle>`,
      );
    }
  }
  parts.push("</svg>");
  return parts.join("");
}

export function metricCards(mean: Record<string, number | null>): string {
  const order = ["f1", "acc", "precision", "recall"];
  return order
    .map((name) => {
      const value = mean[name];
      const shown = value == null ? "–" : value.toFixed(3);
      return `<div class="card" data-metric="${name}"><div class="card-value">${shown}</div><div class="card-label">${name.toUpperCase()}</div></div>`;
    })
    .join("");
}
