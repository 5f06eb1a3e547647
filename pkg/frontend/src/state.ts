// Annotator view state: one card at a time over a server-side session.
//
// The server is authoritative.  A mark click is applied optimistically,
// then the row converges to the card payload the server echoes back; a
// rejected request restores the previous card, so no optimistic mark
// survives an error.  A 409 means the session closed under us: editing
// is disabled for good and a banner explains why.

import {
  ApiError,
  CardView,
  ConcordanceView,
  Mark,
  MarkAction,
  NeighborRow,
  Report,
  SessionView,
} from "./api";

// The slice of Client the state machine actually uses (mockable in
// tests).  The trailing workspace parameter disambiguates session ids,
// which only count up per workspace.
export interface SessionClient {
  createSession(workspace: string, s: number, k: number): Promise<SessionView>;
  session(id: string, workspace?: string): Promise<SessionView>;
  card(sessionId: string, index: number, workspace?: string): Promise<CardView>;
  mark(
    sessionId: string,
    keyword: string,
    word: string,
    lang: string,
    action: MarkAction,
    workspace?: string,
  ): Promise<CardView>;
  addWord(
    sessionId: string,
    keyword: string,
    surface: string,
    lang: string,
    action: MarkAction,
    workspace?: string,
  ): Promise<CardView>;
  concordance(word: string, lang: string, workspace?: string): Promise<ConcordanceView>;
  finalize(
    sessionId: string,
    seeds?: number[],
    workspace?: string,
  ): Promise<{ job: string; state: string }>;
  job(id: string): Promise<{ state: string; error?: string }>;
  report(sessionId: string, workspace?: string): Promise<Report>;
}

export function actionFor(desired: Mark): MarkAction {
  if (desired === "accepted") return "accept";
  if (desired === "rejected") return "reject";
  return "clear";
}

function cloneCard(card: CardView): CardView {
  const columns: { [lang: string]: NeighborRow[] } = {};
  for (const lang of Object.keys(card.columns)) {
    columns[lang] = (card.columns[lang] ?? []).map((row) => ({ ...row }));
  }
  return { ...card, columns };
}

export class AnnotatorState {
  client: SessionClient;
  workspace: string | null = null;
  session: SessionView | null = null;
  card: CardView | null = null;
  editable = false;
  banner: string | null = null;
  cardError: string | null = null;
  addErrors: { [lang: string]: string } = {};
  concordanceView: ConcordanceView | null = null;
  report: Report | null = null;
  finalizing = false;
  private listeners: (() => void)[] = [];
  private wantedIndex = 0;

  constructor(client: SessionClient) {
    this.client = client;
  }

  subscribe(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  // -- session lifecycle --------------------------------------------------

  async open(workspace: string, s: number, k: number): Promise<void> {
    this.workspace = workspace;
    const view = await this.client.createSession(workspace, s, k);
    this.session = view;
    this.editable = view.state === "open";
    this.card = view.first_card ?? null;
    this.wantedIndex = 0;
    if (!this.card) await this.loadCard(0);
    this.notify();
  }

  private get ws(): string | undefined {
    return this.workspace ?? undefined;
  }

  async resume(sessionId: string, workspace?: string): Promise<void> {
    this.workspace = workspace ?? this.workspace;
    const view = await this.client.session(sessionId, this.ws);
    this.session = view;
    this.editable = view.state === "open";
    if (view.state === "closed") {
      this.report = await this.client.report(sessionId, this.ws).catch(() => null);
    }
    await this.loadCard(0);
    this.notify();
  }

  // -- navigation ---------------------------------------------------------

  async loadCard(index: number): Promise<void> {
    if (!this.session) return;
    this.wantedIndex = index;
    try {
      this.card = await this.client.card(this.session.id, index, this.ws);
      this.cardError = null;
    } catch (err) {
      this.card = null;
      this.cardError = err instanceof Error ? err.message : String(err);
    }
    this.notify();
  }

  async retry(): Promise<void> {
    await this.loadCard(this.wantedIndex);
  }

  async next(): Promise<void> {
    if (this.card && this.card.index + 1 < this.card.total) {
      await this.loadCard(this.card.index + 1);
    }
  }

  async prev(): Promise<void> {
    if (this.card && this.card.index > 0) {
      await this.loadCard(this.card.index - 1);
    }
  }

  // -- marking ------------------------------------------------------------

  row(surface: string, lang: string): NeighborRow | null {
    if (!this.card) return null;
    for (const row of this.card.columns[lang] ?? []) {
      if (row.surface === surface) return row;
    }
    return null;
  }

  /** Target mark for a control click: an active control clears itself. */
  targetFor(surface: string, lang: string, control: "accept" | "reject"): Mark {
    const row = this.row(surface, lang);
    const active: Mark = control === "accept" ? "accepted" : "rejected";
    if (row && row.mark === active) return "unmarked";
    return active;
  }

  async setMark(surface: string, lang: string, desired: Mark): Promise<void> {
    if (!this.editable || !this.card || !this.session) return;
    const row = this.row(surface, lang);
    if (!row || row.mark === desired) return; // unchanged: no request
    const previous = this.card;
    const optimistic = cloneCard(previous);
    for (const r of optimistic.columns[lang] ?? []) {
      if (r.surface === surface) r.mark = desired;
    }
    this.card = optimistic;
    this.notify();
    try {
      this.card = await this.client.mark(
        this.session.id,
        this.card.keyword.surface,
        surface,
        lang,
        actionFor(desired),
        this.ws,
      );
      this.banner = null;
      this.session = await this.client.session(this.session.id, this.ws);
    } catch (err) {
      this.card = previous;
      this.fail(err);
    }
    this.notify();
  }

  async addWord(surface: string, lang: string, desired: Mark): Promise<void> {
    if (!this.editable || !this.card || !this.session) return;
    const trimmed = surface.trim();
    if (!trimmed) {
      this.addErrors[lang] = "type a word first";
      this.notify();
      return;
    }
    try {
      this.card = await this.client.addWord(
        this.session.id,
        this.card.keyword.surface,
        trimmed,
        lang,
        actionFor(desired),
        this.ws,
      );
      delete this.addErrors[lang];
      this.session = await this.client.session(this.session.id, this.ws);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.fail(err);
      } else {
        // validation problem (e.g. not in vocabulary): inline, not banner
        this.addErrors[lang] = err instanceof Error ? err.message : String(err);
      }
    }
    this.notify();
  }

  private fail(err: unknown): void {
    if (err instanceof ApiError && err.status === 409) {
      this.editable = false;
      this.banner = `session closed: ${err.message}`;
    } else {
      this.banner = err instanceof Error ? err.message : String(err);
    }
  }

  // -- concordance --------------------------------------------------------

  async showConcordance(word: string, lang: string): Promise<void> {
    try {
      this.concordanceView = await this.client.concordance(
        word,
        lang,
        this.workspace ?? undefined,
      );
    } catch (err) {
      this.concordanceView = {
        word,
        lang,
        snippets: [],
      };
      this.banner = err instanceof Error ? err.message : String(err);
    }
    this.notify();
  }

  hideConcordance(): void {
    this.concordanceView = null;
    this.notify();
  }

  // -- finalize -----------------------------------------------------------

  async finalizeSession(seeds?: number[]): Promise<void> {
    if (!this.session) return;
    this.finalizing = true;
    this.notify();
    try {
      const { job } = await this.client.finalize(this.session.id, seeds, this.ws);
      let status = await this.client.job(job);
      while (status.state === "running") {
        await new Promise((resolve) => setTimeout(resolve, 250));
        status = await this.client.job(job);
      }
      if (status.state === "failed") {
        this.banner = status.error ?? "finalize failed";
      } else {
        this.report = await this.client.report(this.session.id, this.ws);
        this.session = await this.client.session(this.session.id, this.ws);
        this.editable = false;
        this.banner = null;
      }
    } catch (err) {
      this.fail(err);
    }
    this.finalizing = false;
    if (this.card && this.session) {
      // refresh the card so rows show the closed-session state
      await this.loadCard(this.card.index);
    }
    this.notify();
  }
}
