// Typed client for the wordbench session service.
//
// Every endpoint returns its JSON body; non-2xx responses become ApiError
// with the server's {"detail": ...} message, so callers can branch on
// status (400 validation, 404 unknown, 409 closed session).

export type Mark = "accepted" | "rejected" | "unmarked";
export type MarkAction = "accept" | "reject" | "clear";

export interface WordRef {
  word: string;
  lang: string;
}

export interface NeighborRow {
  surface: string;
  lang: string;
  cosine: number;
  added: boolean;
  mark: Mark;
}

export interface CardView {
  index: number;
  total: number;
  state: string;
  keyword: { surface: string; lang: string };
  columns: { [lang: string]: NeighborRow[] };
}

export interface FeedbackKeyword {
  keyword: WordRef;
  positive: WordRef[];
  negative: WordRef[];
}

export interface FeedbackSet {
  keywords: FeedbackKeyword[];
}

export interface SessionView {
  id: string;
  state: string;
  s: number;
  k: number;
  session_index: number;
  n_cards: number;
  n_marks: number;
  src_lang: string;
  tgt_lang: string;
  feedback: FeedbackSet;
  first_card?: CardView;
}

export interface WorkspaceView {
  workspace: string;
  round: number;
  has_model: boolean;
  src_lang: string;
  tgt_lang: string;
  sessions: string[];
}

export interface ConcordanceView {
  word: string;
  lang: string;
  snippets: { doc_id: string; text: string }[];
}

export interface JobView {
  id: string;
  session: string;
  state: string;
  error?: string;
  report?: Report;
}

export interface ConditionStats {
  accuracies: number[];
  mean: number;
}

export interface Report {
  conditions: { [name: string]: ConditionStats };
  session?: string;
  [key: string]: unknown;
}

export class ApiError extends Error {
  status: number;

  constructor(status: number, detail: string) {
    super(detail);
    this.status = status;
  }
}

async function asError(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, detail);
}

function withWorkspace(path: string, workspace?: string): string {
  if (!workspace) return path;
  const sep = path.includes("?") ? "&" : "?";
  return `${path}${sep}workspace=${encodeURIComponent(workspace)}`;
}

export class Client {
  base: string;

  constructor(base = "") {
    this.base = base;
  }

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(this.base + path);
    if (!response.ok) throw await asError(response);
    return response.json() as Promise<T>;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(this.base + path, {
      method: "post",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw await asError(response);
    return response.json() as Promise<T>;
  }

  health(): Promise<{ status: string; workspaces: string[] }> {
    return this.get("/health");
  }

  workspace(name: string): Promise<WorkspaceView> {
    return this.get(`/workspaces/${encodeURIComponent(name)}`);
  }

  createSession(workspace: string, s: number, k: number): Promise<SessionView> {
    return this.post(`/workspaces/${encodeURIComponent(workspace)}/sessions`, { s, k });
  }

  session(id: string, workspace?: string): Promise<SessionView> {
    return this.get(withWorkspace(`/sessions/${encodeURIComponent(id)}`, workspace));
  }

  card(sessionId: string, index: number, workspace?: string): Promise<CardView> {
    return this.get(
      withWorkspace(`/sessions/${encodeURIComponent(sessionId)}/cards/${index}`, workspace),
    );
  }

  mark(
    sessionId: string,
    keyword: string,
    word: string,
    lang: string,
    action: MarkAction,
    workspace?: string,
  ): Promise<CardView> {
    return this.post(withWorkspace(`/sessions/${encodeURIComponent(sessionId)}/marks`, workspace), {
      keyword,
      word,
      lang,
      mark: action,
    });
  }

  addWord(
    sessionId: string,
    keyword: string,
    surface: string,
    lang: string,
    action: MarkAction,
    workspace?: string,
  ): Promise<CardView> {
    return this.post(withWorkspace(`/sessions/${encodeURIComponent(sessionId)}/words`, workspace), {
      keyword,
      surface,
      lang,
      mark: action,
    });
  }

  concordance(word: string, lang: string, workspace?: string): Promise<ConcordanceView> {
    const params = new URLSearchParams({ word, lang });
    if (workspace) params.set("workspace", workspace);
    return this.get(`/concordance?${params.toString()}`);
  }

  finalize(
    sessionId: string,
    seeds?: number[],
    workspace?: string,
  ): Promise<{ job: string; state: string }> {
    const body = seeds ? { seeds } : {};
    return this.post(
      withWorkspace(`/sessions/${encodeURIComponent(sessionId)}/finalize`, workspace),
      body,
    );
  }

  job(id: string): Promise<JobView> {
    return this.get(`/jobs/${encodeURIComponent(id)}`);
  }

  report(sessionId: string, workspace?: string): Promise<Report> {
    return this.get(withWorkspace(`/sessions/${encodeURIComponent(sessionId)}/report`, workspace));
  }
}
