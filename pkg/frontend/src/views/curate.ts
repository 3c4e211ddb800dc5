/** Human-vs-AI diff review driving the curation loop: per-field triples with
 * verdicts, and Finalize gated until every disagreement is decided. */

import { ApiClient } from "../api.js";
import {
  canFinalize,
  initReview,
  pendingFields,
  setVerdict,
  verdictsPayload,
  type ReviewState,
  type VerdictChoice,
} from "../diff.js";
import type { TaskPayload } from "../types.js";

export class CurateView {
  private review: ReviewState = initReview([]);
  private task: TaskPayload | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
    private readonly taskId: string,
  ) {}

  async load(): Promise<void> {
    this.task = await this.api.getTask(this.taskId);
    this.review = initReview(this.task.fewshot_diff);
    this.render();
  }

  private render(): void {
    if (!this.task) return;
    const rows = this.review.rows
      .map(
        (row) => `
        <tr data-field="${row.field}">
          <td>${row.field}</td>
          <td class="human">${row.human ?? "<i>absent</i>"}</td>
          <td class="ai">${row.ai ?? "<i>absent</i>"}</td>
          <td>
            <select data-verdict="${row.field}">
              <option value="">choose…</option>
              <option value="accept-human">accept human</option>
              <option value="accept-ai">accept AI</option>
              <option value="edit">edit…</option>
            </select>
            <input data-edit="${row.field}" placeholder="edited value" hidden />
          </td>
        </tr>`,
      )
      .join("");
    this.root.innerHTML = `
      <section class="curate">
        <h2>Curation ${this.task.task_id} <span class="state">${this.task.state}</span></h2>
        <div class="actions">
          <button id="human-pass" type="button">Mark human pass</button>
          <button id="fewshot-check" type="button">Run few-shot check</button>
          <button id="finalize" type="button" disabled>Finalize</button>
        </div>
        <table class="diff">
          <thead><tr><th>field</th><th>human</th><th>few-shot AI</th><th>verdict</th></tr></thead>
          <tbody>${rows || '<tr><td colspan="4">no disagreements</td></tr>'}</tbody>
        </table>
        <div id="status"></div>
      </section>`;
    this.root.querySelectorAll<HTMLSelectElement>("select[data-verdict]").forEach((select) => {
      select.addEventListener("change", () => {
        const field = select.dataset.verdict!;
        const editBox = this.root.querySelector<HTMLInputElement>(`input[data-edit="${field}"]`);
        if (select.value === "edit") {
          editBox?.removeAttribute("hidden");
          this.review = setVerdict(this.review, field, "edit", editBox?.value ?? "");
        } else if (select.value) {
          editBox?.setAttribute("hidden", "");
          this.review = setVerdict(this.review, field, select.value as VerdictChoice);
        }
        this.syncFinalize();
      });
    });
    this.root.querySelectorAll<HTMLInputElement>("input[data-edit]").forEach((input) => {
      input.addEventListener("input", () => {
        this.review = setVerdict(this.review, input.dataset.edit!, "edit", input.value);
        this.syncFinalize();
      });
    });
    this.root.querySelector("#human-pass")?.addEventListener("click", () => void this.advance("human_pass"));
    this.root
      .querySelector("#fewshot-check")
      ?.addEventListener("click", () => void this.advance("fewshot_check"));
    this.root.querySelector("#finalize")?.addEventListener("click", () => void this.finalize());
    this.syncFinalize();
  }

  private syncFinalize(): void {
    const button = this.root.querySelector<HTMLButtonElement>("#finalize");
    if (!button) return;
    const ready = this.task?.state === "FewShotChecked" && canFinalize(this.review);
    button.disabled = !ready;
    const status = this.root.querySelector("#status");
    if (status && !ready && this.review.rows.length) {
      status.textContent = `verdicts pending: ${pendingFields(this.review).join(", ")}`;
    }
  }

  private async advance(action: "human_pass" | "fewshot_check"): Promise<void> {
    this.task = await this.api.advance(this.taskId, action);
    this.review = initReview(this.task.fewshot_diff);
    this.render();
  }

  private async finalize(): Promise<void> {
    this.task = await this.api.advance(this.taskId, "finalize", {
      verdicts: verdictsPayload(this.review),
    });
    this.render();
    const status = this.root.querySelector("#status");
    if (status) status.textContent = "finalized: record added to the demonstration pool";
  }
}
