/** Browser bootstrap: project picker + review loop. */

import { ApiClient } from "./api.js";
import { mountApp } from "./app.js";

function startForm(root: HTMLElement, api: ApiClient): void {
  root.innerHTML = `
    <div class="start">
      <h1>taskforge</h1>
      <section>
        <h2>Open a project</h2>
        <form id="open-form">
          <input name="project" placeholder="project id (p…)" required />
          <button class="primary">open</button>
        </form>
      </section>
      <section>
        <h2>…or create one</h2>
        <form id="create-form">
          <label>CSV <input type="file" name="data" accept=".csv" required /></label>
          <label>Schema JSON
            <textarea name="schema" rows="6" required
              placeholder='{"name":"flight","time":"ts","entity":["airline"],"categorical":[],"numerical":[]}'></textarea>
          </label>
          <label>Entity <input name="entity" value="root" required /></label>
          <label>Window <input name="window" value="7d" required /></label>
          <button class="primary">create project</button>
        </form>
        <p class="error" id="create-error" hidden></p>
      </section>
    </div>`;

  const openForm = root.querySelector<HTMLFormElement>("#open-form")!;
  openForm.addEventListener("submit", (event) => {
    event.preventDefault();
    const project = new FormData(openForm).get("project") as string;
    window.location.search = `?project=${encodeURIComponent(project.trim())}`;
  });

  const createForm = root.querySelector<HTMLFormElement>("#create-form")!;
  createForm.addEventListener("submit", (event) => {
    event.preventDefault();
    void (async () => {
      const data = new FormData(createForm);
      const errorBox = root.querySelector<HTMLElement>("#create-error")!;
      try {
        const file = data.get("data") as File;
        const schema = JSON.parse(data.get("schema") as string) as object;
        const created = await api.createProject(
          file,
          schema,
          data.get("entity") as string,
          data.get("window") as string,
        );
        window.location.search = `?project=${encodeURIComponent(created.project_id)}`;
      } catch (error) {
        errorBox.hidden = false;
        errorBox.textContent = String(error);
      }
    })();
  });
}

export function boot(root: HTMLElement): void {
  const api = new ApiClient("");
  const params = new URLSearchParams(window.location.search);
  const projectId = params.get("project");
  if (!projectId) {
    startForm(root, api);
    return;
  }
  const k = Number(params.get("k") ?? "10");
  const sessionId = params.get("session") ?? undefined;
  const app = mountApp(root, api, {
    projectId,
    k,
    sessionId,
    storage: window.localStorage,
  });
  void app.start();
}

const rootElement = document.getElementById("app");
if (rootElement) boot(rootElement);
