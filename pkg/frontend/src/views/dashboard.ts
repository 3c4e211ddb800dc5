/** Experiment dashboard: metric cards, per-condition outcome heatmap, bar
 * charts per parameter, and the similarity scatter. All numbers come from
 * server reports; this view only draws them. */

import { ApiClient } from "../api.js";
import {
  barChartSvg,
  heatmapSvg,
  metricCards,
  scatterSvg,
  type HeatmapCell,
  type ScatterPoint,
} from "../charts.js";
import type { ExperimentReportPayload } from "../types.js";

export interface DashboardData {
  report: ExperimentReportPayload;
  /** per-condition rates per outcome, e.g. {slot: {TP: 0.9, FP: 0.05, ...}} */
  slot_outcomes: Record<string, Record<string, number>>;
  scatter: ScatterPoint[];
}

export class DashboardView {
  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
  ) {}

  /** Fetch the fill-rate stats as a fallback data source when no experiment
   * report file is wired in; experiment payloads override via render(). */
  async load(): Promise<void> {
    const stats = await this.api.getStats();
    const bars = Object.entries(stats.fill_rates).map(([label, value]) => ({ label, value }));
    this.root.innerHTML = `
      <section class="dashboard">
        <h2>Store overview</h2>
        <p>${stats.documents} documents · ${stats.paragraphs} paragraphs · ${stats.records} records · pool ${stats.pool_size}</p>
        <h3>Per-condition fill rates</h3>
        ${barChartSvg(bars)}
      </section>`;
  }

  render(data: DashboardData): void {
    const cells: HeatmapCell[] = [];
    for (const [slot, outcomes] of Object.entries(data.slot_outcomes)) {
      for (const [outcome, value] of Object.entries(outcomes)) {
        cells.push({ row: slot, col: outcome, value });
      }
    }
    const bars = Object.entries(data.report.mean)
      .filter(([, value]) => value != null)
      .map(([label, value]) => ({ label, value: value as number }));
    this.root.innerHTML = `
      <section class="dashboard">
        <h2>Experiment</h2>
        <div class="cards">${metricCards(data.report.mean)}</div>
        <h3>Per-condition outcomes</h3>
        ${heatmapSvg(cells)}
        <h3>Metric breakdown</h3>
        ${barChartSvg(bars)}
        <h3>Similarity scatter (new vs pool paragraphs)</h3>
        ${scatterSvg(data.scatter)}
      </section>`;
  }
}
