/** Thin typed client over the taskforge HTTP API. */
export class ApiError extends Error {
    constructor(status, detail) {
        super(`HTTP ${status}: ${detail}`);
        this.status = status;
        this.detail = detail;
    }
}
async function parseError(response) {
    let detail = response.statusText;
    try {
        const body = (await response.json());
        if (body.detail)
            detail = body.detail;
    }
    catch {
        // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
}
export class ApiClient {
    constructor(baseUrl = "") {
        this.baseUrl = baseUrl;
    }
    async request(path, init) {
        const response = await fetch(this.baseUrl + path, init);
        if (!response.ok)
            await parseError(response);
        return (await response.json());
    }
    createProject(csv, schema, entity, window) {
        const form = new FormData();
        form.append("data", csv, "data.csv");
        form.append("schema", JSON.stringify(schema));
        form.append("entity", entity);
        form.append("window", window);
        return this.request("/projects", { method: "POST", body: form });
    }
    createSession(projectId) {
        return this.request(`/projects/${projectId}/sessions`, { method: "POST" });
    }
    fetchBatch(projectId, sessionId, k) {
        return this.request(`/projects/${projectId}/sessions/${sessionId}/batch?k=${k}`);
    }
    submitFeedback(projectId, sessionId, ratings, idempotencyKey) {
        return this.request(`/projects/${projectId}/sessions/${sessionId}/feedback`, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify({ ratings, idempotency_key: idempotencyKey }),
        });
    }
    fetchHistory(projectId, sessionId) {
        return this.request(`/projects/${projectId}/sessions/${sessionId}/history`);
    }
    solveTask(projectId, taskId) {
        return this.request(`/projects/${projectId}/tasks/${taskId}/solve`, {
            method: "POST",
        });
    }
}
