/** Thin typed client over the taskforge HTTP API. */

import type {
  BatchResponse,
  CreateProjectResponse,
  FeedbackAck,
  HistoryResponse,
  ModelReport,
  RatingSubmission,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function parseError(response: Response): Promise<never> {
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: string };
    if (body.detail) detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  createProject(
    csv: Blob,
    schema: object,
    entity: string,
    window: string,
  ): Promise<CreateProjectResponse> {
    const form = new FormData();
    form.append("data", csv, "data.csv");
    form.append("schema", JSON.stringify(schema));
    form.append("entity", entity);
    form.append("window", window);
    return this.request("/projects", { method: "POST", body: form });
  }

  createSession(projectId: string): Promise<{ session_id: string }> {
    return this.request(`/projects/${projectId}/sessions`, { method: "POST" });
  }

  fetchBatch(projectId: string, sessionId: string, k: number): Promise<BatchResponse> {
    return this.request(
      `/projects/${projectId}/sessions/${sessionId}/batch?k=${k}`,
    );
  }

  submitFeedback(
    projectId: string,
    sessionId: string,
    ratings: RatingSubmission[],
    idempotencyKey: string,
  ): Promise<FeedbackAck> {
    return this.request(`/projects/${projectId}/sessions/${sessionId}/feedback`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ ratings, idempotency_key: idempotencyKey }),
    });
  }

  fetchHistory(projectId: string, sessionId: string): Promise<HistoryResponse> {
    return this.request(`/projects/${projectId}/sessions/${sessionId}/history`);
  }

  solveTask(projectId: string, taskId: string): Promise<ModelReport> {
    return this.request(`/projects/${projectId}/tasks/${taskId}/solve`, {
      method: "POST",
    });
  }
}
