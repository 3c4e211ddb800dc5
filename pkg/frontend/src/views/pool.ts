/** Demonstration pool listing: finalized gold records available as shots. */

import { ApiClient } from "../api.js";
import { SLOTS } from "../types.js";

export class PoolView {
  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
  ) {}

  async load(): Promise<void> {
    const pool = await this.api.getPool();
    const rows = pool.entries
      .map((entry) => {
        const filled = SLOTS.filter((slot) => entry.gold[slot] != null).length;
        return `
        <tr data-id="${entry.id}">
          <td>${entry.id}</td>
          <td>${entry.paragraph.slice(0, 90)}…</td>
          <td>${filled}/10</td>
          <td>${entry.curation_state}</td>
        </tr>`;
      })
      .join("");
    this.root.innerHTML = `
      <section class="pool">
        <h2>Demonstration pool (${pool.n})</h2>
        <table>
          <thead><tr><th>id</th><th>paragraph</th><th>filled slots</th><th>state</th></tr></thead>
          <tbody>${rows || '<tr><td colspan="4">pool is empty</td></tr>'}</tbody>
        </table>
      </section>`;
  }
}
