// DOM rendering for the annotator.  The whole view is rebuilt from
// AnnotatorState on every change; at card scale that is instant and
// keeps the render path trivially in sync with the state machine.

import { CardView, NeighborRow, Report } from "./api";
import { AnnotatorState } from "./state";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderBanner(state: AnnotatorState): HTMLElement | null {
  if (!state.banner) return null;
  return el("div", "banner", state.banner);
}

function renderProgress(state: AnnotatorState): HTMLElement {
  const bar = el("div", "progress");
  if (state.session && state.card) {
    bar.append(
      el("span", "session-id", state.session.id),
      el("span", undefined, `card ${state.card.index + 1} of ${state.card.total}`),
      el("span", undefined, `${state.session.n_marks} marks`),
      el("span", "state-tag", state.session.state),
    );
  }
  return bar;
}

function markControls(state: AnnotatorState, row: NeighborRow): HTMLElement {
  const wrap = el("span", "controls");
  const accept = el("button", "ctl accept", "✓");
  const reject = el("button", "ctl reject", "✗");
  if (row.mark === "accepted") accept.classList.add("active");
  if (row.mark === "rejected") reject.classList.add("active");
  accept.disabled = reject.disabled = !state.editable;
  accept.onclick = () => {
    void state.setMark(row.surface, row.lang, state.targetFor(row.surface, row.lang, "accept"));
  };
  reject.onclick = () => {
    void state.setMark(row.surface, row.lang, state.targetFor(row.surface, row.lang, "reject"));
  };
  wrap.append(accept, reject);
  return wrap;
}

function renderColumn(state: AnnotatorState, lang: string, rows: NeighborRow[]): HTMLElement {
  const col = el("div", "column");
  col.append(el("h3", undefined, lang));
  if (rows.length === 0) {
    col.append(el("p", "empty", "no neighbors in this language"));
  }
  for (const row of rows) {
    const line = el("div", row.added ? "row added" : "row");
    const word = el("a", "word", row.surface);
    word.href = "#";
    word.onclick = (event) => {
      event.preventDefault();
      void state.showConcordance(row.surface, row.lang);
    };
    line.append(word, el("span", "cosine", row.cosine.toFixed(3)), markControls(state, row));
    col.append(line);
  }
  col.append(renderAddBox(state, lang));
  return col;
}

function renderAddBox(state: AnnotatorState, lang: string): HTMLElement {
  const box = el("div", "add-box");
  const input = el("input");
  input.placeholder = `add ${lang} word`;
  input.disabled = !state.editable;
  const accept = el("button", "ctl accept", "+✓");
  const reject = el("button", "ctl reject", "+✗");
  accept.disabled = reject.disabled = !state.editable;
  accept.onclick = () => void state.addWord(input.value, lang, "accepted");
  reject.onclick = () => void state.addWord(input.value, lang, "rejected");
  box.append(input, accept, reject);
  const error = state.addErrors[lang];
  if (error) box.append(el("span", "inline-error", error));
  return box;
}

function renderCard(state: AnnotatorState, card: CardView): HTMLElement {
  const section = el("section", "card");
  const head = el("h2", "keyword");
  const kw = el("a", "word", card.keyword.surface);
  kw.href = "#";
  kw.onclick = (event) => {
    event.preventDefault();
    void state.showConcordance(card.keyword.surface, card.keyword.lang);
  };
  head.append(kw, el("span", "kw-lang", ` (${card.keyword.lang})`));
  section.append(head);
  const columns = el("div", "columns");
  for (const lang of Object.keys(card.columns)) {
    columns.append(renderColumn(state, lang, card.columns[lang] ?? []));
  }
  section.append(columns);
  return section;
}

function renderNav(state: AnnotatorState): HTMLElement {
  const nav = el("div", "nav");
  const prev = el("button", undefined, "← back");
  const next = el("button", undefined, "forward →");
  prev.disabled = !state.card || state.card.index === 0;
  next.disabled = !state.card || state.card.index + 1 >= state.card.total;
  prev.onclick = () => void state.prev();
  next.onclick = () => void state.next();
  const finalize = el("button", "finalize", state.finalizing ? "refining..." : "finalize session");
  finalize.disabled = !state.editable || state.finalizing;
  finalize.onclick = () => void state.finalizeSession();
  nav.append(prev, next, finalize);
  return nav;
}

function renderReport(report: Report): HTMLElement {
  const section = el("section", "report");
  section.append(el("h2", undefined, "retraining results"));
  const table = el("table");
  const head = el("tr");
  head.append(el("th", undefined, "condition"), el("th", undefined, "mean accuracy"));
  table.append(head);
  for (const name of Object.keys(report.conditions)) {
    const line = el("tr");
    const stats = report.conditions[name];
    line.append(
      el("td", undefined, name),
      el("td", undefined, stats ? stats.mean.toFixed(4) : "-"),
    );
    table.append(line);
  }
  section.append(table);
  return section;
}

function renderConcordance(state: AnnotatorState): HTMLElement | null {
  const view = state.concordanceView;
  if (!view) return null;
  const popup = el("div", "concordance");
  const close = el("button", "close", "×");
  close.onclick = () => state.hideConcordance();
  popup.append(close, el("h3", undefined, `"${view.word}" (${view.lang})`));
  if (view.snippets.length === 0) {
    popup.append(el("p", "empty", "no example sentences"));
  }
  for (const snippet of view.snippets) {
    popup.append(el("p", "snippet", snippet.text));
  }
  return popup;
}

export function render(root: HTMLElement, state: AnnotatorState): void {
  root.textContent = "";
  const banner = renderBanner(state);
  if (banner) root.append(banner);
  root.append(renderProgress(state));
  if (state.cardError) {
    const error = el("div", "load-error");
    error.append(el("span", undefined, `could not load card: ${state.cardError} `));
    const retry = el("button", undefined, "retry");
    retry.onclick = () => void state.retry();
    error.append(retry);
    root.append(error);
  } else if (state.card) {
    root.append(renderCard(state, state.card));
  }
  root.append(renderNav(state));
  if (state.report) root.append(renderReport(state.report));
  const popup = renderConcordance(state);
  if (popup) root.append(popup);
}
