/** DOM controller for the batch-review loop. */
import { ApiError } from "./api.js";
import { allResolved, attachReport, fillRemainingNotUseful, markMeaningless, meaninglessTags, ratingsPayload, setRating, stateFromBatch, tallyFromHistory, usefulInBatch, } from "./store.js";
const MEANINGLESS_STORE_KEY = "taskforge.meaningless";
function nonce() {
    const c = globalThis.crypto;
    if (c && "randomUUID" in c)
        return c.randomUUID().slice(0, 8);
    return Math.random().toString(36).slice(2, 10);
}
function escapeHtml(text) {
    return text
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;");
}
function formatDay(epochSeconds) {
    return new Date(epochSeconds * 1000).toISOString().slice(0, 10);
}
function formatLabel(label) {
    if (label === null)
        return "–";
    if (typeof label === "number") {
        return Number.isInteger(label) ? String(label) : label.toFixed(3);
    }
    return label;
}
function metricLine(report) {
    const name = report.metric_name === "r2" ? "R²" : "accuracy";
    const value = report.metric_value === null ? "n/a" : report.metric_value.toFixed(3);
    const baseline = report.baseline_value === null ? "n/a" : report.baseline_value.toFixed(3);
    return `${name} ${value} <span class="muted">(baseline ${baseline})</span>`;
}
export class App {
    constructor(root, api, options) {
        this.root = root;
        this.api = api;
        this.options = options;
        this.state = null;
        this.sessionId = null;
        this.inflightSubmit = null;
        this.root.addEventListener("click", (event) => {
            const target = event.target.closest("[data-action]");
            if (!target || target.disabled)
                return;
            void this.dispatch(target.dataset.action, target.dataset);
        });
    }
    get k() {
        return this.options.k ?? 10;
    }
    async dispatch(action, data) {
        if (action === "rate") {
            this.rate(data.task, data.rating);
        }
        else if (action === "meaningless") {
            this.meaningless(data.task);
        }
        else if (action === "fill-remaining") {
            this.fillRemaining();
        }
        else if (action === "submit") {
            await this.submit();
        }
        else if (action === "solve") {
            await this.solve(data.task);
        }
    }
    async start() {
        if (this.options.sessionId) {
            this.sessionId = this.options.sessionId;
        }
        else {
            const created = await this.api.createSession(this.options.projectId);
            this.sessionId = created.session_id;
        }
        await this.sync();
    }
    /** Rebuild state from the server: history for the tally, batch for cards. */
    async sync() {
        const history = await this.api.fetchHistory(this.options.projectId, this.sessionId);
        const batch = await this.api.fetchBatch(this.options.projectId, this.sessionId, this.k);
        this.state = stateFromBatch(batch, tallyFromHistory(history), nonce());
        this.render();
    }
    rate(taskId, rating) {
        if (!this.state || this.state.phase !== "review")
            return;
        this.state = setRating(this.state, taskId, rating);
        this.render();
    }
    meaningless(taskId) {
        if (!this.state || this.state.phase !== "review")
            return;
        this.state = markMeaningless(this.state, taskId);
        this.render();
    }
    fillRemaining() {
        if (!this.state || this.state.phase !== "review")
            return;
        this.state = fillRemainingNotUseful(this.state);
        this.render();
    }
    /** Submit ratings; a second call while one is in flight joins it. */
    submit() {
        if (this.inflightSubmit)
            return this.inflightSubmit;
        this.inflightSubmit = this.doSubmit().finally(() => {
            this.inflightSubmit = null;
        });
        return this.inflightSubmit;
    }
    async doSubmit() {
        const state = this.state;
        if (!state || state.phase !== "review" || !allResolved(state))
            return;
        const payload = ratingsPayload(state);
        const tags = meaninglessTags(state);
        // optimistic: count this batch into the tally while the post runs
        this.state = {
            ...state,
            phase: "submitting",
            usefulTally: state.usefulTally + usefulInBatch(state),
        };
        this.render();
        try {
            await this.api.submitFeedback(this.options.projectId, this.sessionId, payload, state.idempotencyKey);
            this.storeMeaninglessTags(tags);
            const batch = await this.api.fetchBatch(this.options.projectId, this.sessionId, this.k);
            this.state = stateFromBatch(batch, this.state.usefulTally, nonce());
            this.render();
        }
        catch (error) {
            if (error instanceof ApiError && error.status === 409) {
                // conflict: roll back optimistic state to server truth
                await this.sync();
                return;
            }
            this.state = { ...this.state, phase: "review", error: String(error) };
            this.render();
        }
    }
    async solve(taskId) {
        if (!this.state)
            return;
        try {
            const report = await this.api.solveTask(this.options.projectId, taskId);
            const card = this.state.cards.find((c) => c.task.task_id === taskId);
            if (!card)
                return;
            const task = { ...card.task, report };
            this.state = attachReport(this.state, task);
            this.render();
        }
        catch (error) {
            this.state = { ...this.state, error: String(error) };
            this.render();
        }
    }
    storeMeaninglessTags(tags) {
        const storage = this.options.storage;
        if (!storage || tags.length === 0)
            return;
        const existing = storage.getItem(MEANINGLESS_STORE_KEY);
        const merged = new Set(existing ? JSON.parse(existing) : []);
        for (const tag of tags)
            merged.add(tag);
        storage.setItem(MEANINGLESS_STORE_KEY, JSON.stringify([...merged].sort()));
    }
    render() {
        const state = this.state;
        if (!state) {
            this.root.innerHTML = `<p class="status">loading…</p>`;
            return;
        }
        if (state.phase === "terminal") {
            this.root.innerHTML = `
        <header class="bar">
          <span class="tally" data-testid="tally">marked useful: ${state.usefulTally}</span>
        </header>
        <div class="endstate" data-testid="endstate">
          <h2>Pool exhausted</h2>
          <p>Every task in this project has been reviewed.</p>
        </div>`;
            return;
        }
        const submitting = state.phase === "submitting";
        const ready = allResolved(state);
        const cards = state.cards.map((card) => this.cardHtml(card)).join("");
        this.root.innerHTML = `
      <header class="bar">
        <span class="iteration" data-testid="iteration">iteration ${state.iteration}</span>
        <span class="tally" data-testid="tally">marked useful: ${state.usefulTally}</span>
        <span class="spacer"></span>
        <button data-action="fill-remaining" ${submitting ? "disabled" : ""}>
          remaining = not useful
        </button>
        <button class="primary" data-action="submit" data-testid="submit"
          ${ready && !submitting ? "" : "disabled"}>
          ${submitting ? "submitting…" : "submit & next batch"}
        </button>
      </header>
      ${state.error ? `<p class="error" data-testid="error">${escapeHtml(state.error)}</p>` : ""}
      <main class="cards">${cards}</main>`;
    }
    cardHtml(card) {
        const task = card.task;
        const rows = task.preview
            .map((p) => `
        <tr>
          <td>${escapeHtml(p.entity)}</td>
          <td>${formatDay(p.t_st)}</td>
          <td>${escapeHtml(formatLabel(p.label))}</td>
        </tr>`)
            .join("");
        const reportHtml = task.report
            ? `<p class="metric" data-testid="metric">${metricLine(task.report)}</p>`
            : `<button data-action="solve" data-task="${task.task_id}" data-testid="solve">
           solve
         </button>`;
        return `
      <article class="card ${card.rating ?? "unrated"}" data-testid="card"
        data-task-id="${task.task_id}">
        <div class="card-head">
          <span class="badge ${task.kind}">${task.kind}</span>
          <span class="muted">${task.train_size} train / ${task.validation_size} val</span>
        </div>
        <p class="description">${escapeHtml(task.description)}</p>
        <table class="preview">
          <thead><tr><th>entity</th><th>window start</th><th>label</th></tr></thead>
          <tbody>${rows}</tbody>
        </table>
        ${reportHtml}
        <div class="rating">
          <button data-action="rate" data-task="${task.task_id}" data-rating="useful"
            data-testid="rate-useful" class="${card.rating === "useful" ? "active" : ""}">
            useful
          </button>
          <button data-action="rate" data-task="${task.task_id}" data-rating="not_useful"
            data-testid="rate-not-useful"
            class="${card.rating === "not_useful" && !card.meaningless ? "active" : ""}">
            not useful
          </button>
          <button data-action="meaningless" data-task="${task.task_id}"
            data-testid="meaningless" class="${card.meaningless ? "active" : ""}">
            meaningless
          </button>
        </div>
      </article>`;
    }
}
export function mountApp(root, api, options) {
    const app = new App(root, api, options);
    app.render();
    return app;
}
