/** Annotation entry: paragraph with highlights, ten-slot form pre-filled from
 * the AI pre-annotation, draft save, and the agreement check. */

import { ApiClient } from "../api.js";
import { editField, initForm, toRecordPayload, type FormState } from "../form.js";
import { renderSegments, segments } from "../highlight.js";
import { SLOTS, type Slot, type TaskPayload } from "../types.js";

export class AnnotateView {
  private form: FormState;
  private task: TaskPayload | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
    private readonly taskId: string,
    private readonly annotator: string,
  ) {
    this.form = initForm(null);
  }

  async load(): Promise<void> {
    this.task = await this.api.getTask(this.taskId, this.annotator);
    const draft = this.task.drafts[this.annotator];
    // An existing draft wins over the machine suggestion; edits never auto-submit.
    this.form = initForm(draft ?? this.task.ai_preannotation);
    if (draft) this.form = { ...this.form, fields: this.form.fields.map((f) => ({ ...f, machineSuggested: false })) };
    this.render();
  }

  private render(): void {
    if (!this.task) return;
    const spans: [number, number][] = [];
    const rows = this.form.fields
      .map((field) => {
        const suggested = field.machineSuggested ? " machine-suggested" : "";
        const badge = field.machineSuggested ? '<span class="badge">AI</span>' : "";
        return `
          <label class="slot-row${suggested}">
            <span class="slot-name">${field.slot}${badge}</span>
            <input name="${field.slot}" value="${field.value.replace(/"/g, "&quot;")}" />
          </label>`;
      })
      .join("");
    this.root.innerHTML = `
      <section class="annotate">
        <h2>Task ${this.task.task_id} <span class="state">${this.task.state}</span></h2>
        <p class="paragraph">${renderSegments(segments(this.task.paragraph_text, spans))}</p>
        <form>${rows}</form>
        <div class="actions">
          <button id="save-draft" type="button">Save draft</button>
          <button id="run-agreement" type="button">Run agreement</button>
        </div>
        <div id="status"></div>
      </section>`;
    for (const slot of SLOTS) {
      const input = this.root.querySelector<HTMLInputElement>(`input[name="${slot}"]`);
      input?.addEventListener("input", () => {
        this.form = editField(this.form, slot as Slot, input.value);
      });
    }
    this.root.querySelector("#save-draft")?.addEventListener("click", () => void this.saveDraft());
    this.root
      .querySelector("#run-agreement")
      ?.addEventListener("click", () => void this.runAgreement());
  }

  private status(text: string): void {
    const el = this.root.querySelector("#status");
    if (el) el.textContent = text;
  }

  async saveDraft(): Promise<void> {
    this.task = await this.api.saveDraft(this.taskId, this.annotator, toRecordPayload(this.form));
    this.status("draft saved");
  }

  async runAgreement(): Promise<void> {
    this.task = await this.api.runAgreement(this.taskId);
    const agreement = this.task.agreement;
    if (agreement) {
      this.status(
        agreement.paper_valid
          ? `agreement ok (overlap ${agreement.overlap_rate?.toFixed(2)})`
          : `agreement failed: review ${agreement.invalid_fields.join(", ")}`,
      );
    }
  }
}
