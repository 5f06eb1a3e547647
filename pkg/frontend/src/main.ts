// Entry point: resolve the workspace/session from the query string,
// open or resume, and re-render on every state change.
//
//   ?workspace=ws            open a fresh session (default budgets)
//   ?session=s1              resume an existing session
//   ?workspace=ws&s=10&k=5   open with explicit budgets

import { Client } from "./api";
import { AnnotatorState } from "./state";
import { render } from "./dom";

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const params = new URLSearchParams(window.location.search);
  const client = new Client("");
  const state = new AnnotatorState(client);
  state.subscribe(() => render(root, state));

  const sessionId = params.get("session");
  const workspace = params.get("workspace");
  try {
    if (sessionId) {
      await state.resume(sessionId, workspace ?? undefined);
    } else if (workspace) {
      const s = Number(params.get("s") ?? 50);
      const k = Number(params.get("k") ?? 5);
      await state.open(workspace, s, k);
    } else {
      const health = await client.health();
      root.textContent = "";
      const list = document.createElement("div");
      list.className = "picker";
      const title = document.createElement("h2");
      title.textContent = "pick a workspace";
      list.append(title);
      for (const name of health.workspaces) {
        const link = document.createElement("a");
        link.href = `?workspace=${encodeURIComponent(name)}`;
        link.textContent = name;
        list.append(link);
      }
      root.append(list);
      return;
    }
  } catch (err) {
    root.textContent = `could not start: ${err instanceof Error ? err.message : err}`;
  }
}

void boot();
