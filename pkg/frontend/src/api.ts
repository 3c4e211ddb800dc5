/** Typed client for the server /v1 API. All UI state mutations go through
 * these documented endpoints; there is no client-only persistence. */

import type {
  PoolPayload,
  RecordPayload,
  SearchHitPayload,
  StatsPayload,
  TaskPayload,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const payload = (await response.json()) as { detail?: string };
        if (payload.detail) detail = payload.detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(detail, response.status);
    }
    return (await response.json()) as T;
  }

  getTask(taskId: string, annotator?: string): Promise<TaskPayload> {
    const query = annotator ? `?annotator=${encodeURIComponent(annotator)}` : "";
    return this.request("GET", `/v1/annotations/tasks/${taskId}${query}`);
  }

  createTask(paragraphId: string, annotators: [string, string]): Promise<TaskPayload> {
    return this.request("POST", "/v1/annotations/tasks", {
      paragraph_id: paragraphId,
      annotators,
    });
  }

  saveDraft(taskId: string, annotator: string, record: RecordPayload): Promise<TaskPayload> {
    return this.request("POST", `/v1/annotations/tasks/${taskId}/draft`, { annotator, record });
  }

  runAgreement(taskId: string): Promise<TaskPayload> {
    return this.request("POST", `/v1/annotations/tasks/${taskId}/agreement`);
  }

  advance(
    taskId: string,
    action: "human_pass" | "fewshot_check" | "finalize" | "exclude",
    payload: Record<string, unknown> = {},
  ): Promise<TaskPayload> {
    return this.request("POST", `/v1/curation/${taskId}/advance`, { action, payload });
  }

  getPool(): Promise<PoolPayload> {
    return this.request("GET", "/v1/pool");
  }

  getStats(): Promise<StatsPayload> {
    return this.request("GET", "/v1/stats");
  }

  searchRecords(
    query: string,
    limit = 20,
    offset = 0,
  ): Promise<{ hits: SearchHitPayload[]; total: number }> {
    const params = new URLSearchParams({ query, limit: String(limit), offset: String(offset) });
    return this.request("GET", `/v1/records?${params.toString()}`);
  }
}
