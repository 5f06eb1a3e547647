// State machine tests against a scripted fake server: optimistic marks,
// rollback on rejected requests, 409 lockout, and add-word validation.

import { describe, expect, test } from "vitest";
import { ApiError, CardView, Mark, MarkAction, NeighborRow, SessionView } from "../src/api";
import { AnnotatorState, SessionClient, actionFor } from "../src/state";

function rows(lang: string, n: number): string[] {
  return Array.from({ length: n }, (_, i) => `${lang}w${i}`);
}

// In-memory stand-in for the service: two cards, five neighbors per
// language, last-write-wins marks.  Requests can be delayed (gate) or
// made to fail once (failNext) to exercise the error paths.
class FakeServer implements SessionClient {
  calls: string[] = [];
  failNext: ApiError | null = null;
  gate: Promise<void> | null = null;
  closed = false;
  k = 5;
  cardCount = 2;
  marks = new Map<string, Mark>();
  added = new Map<number, { surface: string; lang: string }[]>();
  vocab = new Set<string>([...rows("src", 8), ...rows("tgt", 8)].map((w) => w));

  private async gateKeep(call: string): Promise<void> {
    this.calls.push(call);
    if (this.gate) await this.gate;
    if (this.failNext) {
      const err = this.failNext;
      this.failNext = null;
      throw err;
    }
    if (this.closed && (call.startsWith("mark") || call.startsWith("addWord"))) {
      throw new ApiError(409, "session s1 is closed");
    }
  }

  private cardPayload(index: number): CardView {
    const columns: { [lang: string]: NeighborRow[] } = {};
    for (const lang of ["src", "tgt"]) {
      columns[lang] = rows(lang, this.k).map((surface) => ({
        surface,
        lang,
        cosine: 0.9,
        added: false,
        mark: this.marks.get(`${index}|${lang}|${surface}`) ?? "unmarked",
      }));
      for (const extra of this.added.get(index) ?? []) {
        if (extra.lang !== lang) continue;
        columns[lang].push({
          surface: extra.surface,
          lang,
          cosine: 0.5,
          added: true,
          mark: this.marks.get(`${index}|${lang}|${extra.surface}`) ?? "unmarked",
        });
      }
    }
    return {
      index,
      total: this.cardCount,
      state: this.closed ? "closed" : "open",
      keyword: { surface: `kw${index}`, lang: "src" },
      columns,
    };
  }

  private sessionPayload(): SessionView {
    return {
      id: "s1",
      state: this.closed ? "closed" : "open",
      s: this.cardCount,
      k: this.k,
      session_index: 1,
      n_cards: this.cardCount,
      n_marks: this.marks.size,
      src_lang: "src",
      tgt_lang: "tgt",
      feedback: { keywords: [] },
    };
  }

  private indexOf(keyword: string): number {
    return Number(keyword.slice(2));
  }

  async createSession(): Promise<SessionView> {
    await this.gateKeep("createSession");
    return { ...this.sessionPayload(), first_card: this.cardPayload(0) };
  }

  async session(): Promise<SessionView> {
    await this.gateKeep("session");
    return this.sessionPayload();
  }

  async card(_id: string, index: number): Promise<CardView> {
    await this.gateKeep(`card ${index}`);
    if (index < 0 || index >= this.cardCount) throw new ApiError(404, `no card ${index}`);
    return this.cardPayload(index);
  }

  async mark(
    _id: string,
    keyword: string,
    word: string,
    lang: string,
    action: MarkAction,
  ): Promise<CardView> {
    await this.gateKeep(`mark ${keyword} ${lang}:${word} ${action}`);
    const index = this.indexOf(keyword);
    const key = `${index}|${lang}|${word}`;
    if (action === "clear") this.marks.delete(key);
    else this.marks.set(key, action === "accept" ? "accepted" : "rejected");
    return this.cardPayload(index);
  }

  async addWord(
    _id: string,
    keyword: string,
    surface: string,
    lang: string,
    action: MarkAction,
  ): Promise<CardView> {
    await this.gateKeep(`addWord ${keyword} ${lang}:${surface} ${action}`);
    if (!this.vocab.has(surface)) {
      throw new ApiError(400, `'${surface}' (${lang}) is not in vocabulary`);
    }
    const index = this.indexOf(keyword);
    const extras = this.added.get(index) ?? [];
    extras.push({ surface, lang });
    this.added.set(index, extras);
    const key = `${index}|${lang}|${surface}`;
    this.marks.set(key, action === "accept" ? "accepted" : "rejected");
    return this.cardPayload(index);
  }

  async concordance(word: string, lang: string) {
    await this.gateKeep(`concordance ${lang}:${word}`);
    return { word, lang, snippets: [{ doc_id: "d1", text: `a text with ${word}` }] };
  }

  async finalize(): Promise<{ job: string; state: string }> {
    await this.gateKeep("finalize");
    this.closed = true;
    return { job: "job1", state: "done" };
  }

  async job(): Promise<{ state: string }> {
    await this.gateKeep("job");
    return { state: "done" };
  }

  async report() {
    await this.gateKeep("report");
    return { conditions: { base: { accuracies: [0.4], mean: 0.4 } }, session: "s1" };
  }
}

async function openState(server: FakeServer): Promise<AnnotatorState> {
  const state = new AnnotatorState(server);
  await state.open("ws", 2, 5);
  return state;
}

function markCalls(server: FakeServer): string[] {
  return server.calls.filter((c) => c.startsWith("mark"));
}

describe("card rendering state", () => {
  test("opening a session shows the first card with k rows per language", async () => {
    const server = new FakeServer();
    const state = await openState(server);
    expect(state.session?.id).toBe("s1");
    expect(state.card?.index).toBe(0);
    const all = Object.values(state.card!.columns).flat();
    expect(all).toHaveLength(10); // 5 + 5 neighbors -> 10 rows
    expect(all.every((r) => r.mark === "unmarked")).toBe(true);
    expect(state.editable).toBe(true);
  });

  test("back and forward navigate within bounds", async () => {
    const server = new FakeServer();
    const state = await openState(server);
    await state.prev(); // already at the first card
    expect(state.card?.index).toBe(0);
    await state.next();
    expect(state.card?.index).toBe(1);
    await state.next(); // already at the last card
    expect(state.card?.index).toBe(1);
    await state.prev();
    expect(state.card?.index).toBe(0);
  });

  test("card load failure exposes a retry that recovers", async () => {
    const server = new FakeServer();
    const state = await openState(server);
    server.failNext = new ApiError(500, "boom");
    await state.next();
    expect(state.card).toBeNull();
    expect(state.cardError).toBe("boom");
    await state.retry();
    expect(state.cardError).toBeNull();
    expect(state.card?.index).toBe(1);
  });
});

describe("marking", () => {
  test("mark applies optimistically before the server acknowledges", async () => {
    const server = new FakeServer();
    const state = await openState(server);
    let release: () => void = () => {};
    server.gate = new Promise((resolve) => {
      release = resolve;
    });
    const pending = state.setMark("srcw0", "src", "accepted");
    expect(state.row("srcw0", "src")?.mark).toBe("accepted"); // before ack
    server.gate = null;
    release();
    await pending;
    expect(state.row("srcw0", "src")?.mark).toBe("accepted"); // converged
    expect(server.marks.get("0|src|srcw0")).toBe("accepted");
  });

  test("a rejected request reverts the optimistic mark and shows a banner", async () => {
    const server = new FakeServer();
    const state = await openState(server);
    server.failNext = new ApiError(400, "bad mark");
    await state.setMark("srcw0", "src", "accepted");
    expect(state.row("srcw0", "src")?.mark).toBe("unmarked");
    expect(state.banner).toBe("bad mark");
    expect(server.marks.size).toBe(0);
  });

  test("409 disables editing and keeps it disabled", async () => {
    const server = new FakeServer();
    const state = await openState(server);
    server.failNext = new ApiError(409, "session s1 is closed");
    await state.setMark("srcw0", "src", "accepted");
    expect(state.editable).toBe(false);
    expect(state.banner).toContain("session closed");
    expect(state.row("srcw0", "src")?.mark).toBe("unmarked");
    const before = markCalls(server).length;
    await state.setMark("srcw1", "src", "accepted"); // locked out: no request
    expect(markCalls(server)).toHaveLength(before);
  });

  test("no request is sent for an unchanged mark", async () => {
    const server = new FakeServer();
    const state = await openState(server);
    await state.setMark("srcw0", "src", "unmarked"); // already unmarked
    expect(markCalls(server)).toHaveLength(0);
    await state.setMark("srcw0", "src", "accepted");
    expect(markCalls(server)).toHaveLength(1);
    await state.setMark("srcw0", "src", "accepted"); // same again
    expect(markCalls(server)).toHaveLength(1);
  });

  test("reject after accept ends with a single rejected mark", async () => {
    const server = new FakeServer();
    const state = await openState(server);
    await state.setMark("tgtw2", "tgt", "accepted");
    await state.setMark("tgtw2", "tgt", "rejected");
    expect(state.row("tgtw2", "tgt")?.mark).toBe("rejected");
    expect(server.marks.get("0|tgt|tgtw2")).toBe("rejected");
    expect(server.marks.size).toBe(1); // last write wins, one mark total
  });

  test("clicking an active control clears the mark", async () => {
    const server = new FakeServer();
    const state = await openState(server);
    await state.setMark("srcw1", "src", "accepted");
    expect(state.targetFor("srcw1", "src", "accept")).toBe("unmarked");
    await state.setMark("srcw1", "src", state.targetFor("srcw1", "src", "accept"));
    expect(state.row("srcw1", "src")?.mark).toBe("unmarked");
    expect(server.marks.size).toBe(0);
    expect(markCalls(server)[1]).toContain(" clear");
  });

  test("actionFor maps view marks onto wire actions", () => {
    expect(actionFor("accepted")).toBe("accept");
    expect(actionFor("rejected")).toBe("reject");
    expect(actionFor("unmarked")).toBe("clear");
  });
});

describe("adding words", () => {
  test("an in-vocabulary word appears at the column bottom with its mark", async () => {
    const server = new FakeServer();
    const state = await openState(server);
    await state.addWord("tgtw7", "tgt", "accepted");
    const row = state.row("tgtw7", "tgt");
    expect(row?.added).toBe(true);
    expect(row?.mark).toBe("accepted");
    const col = state.card!.columns["tgt"]!;
    expect(col[col.length - 1]?.surface).toBe("tgtw7");
    expect(state.addErrors["tgt"]).toBeUndefined();
  });

  test("an out-of-vocabulary word shows the server message inline", async () => {
    const server = new FakeServer();
    const state = await openState(server);
    await state.addWord("zzz", "tgt", "accepted");
    expect(state.addErrors["tgt"]).toContain("not in vocabulary");
    expect(state.banner).toBeNull();
    expect(state.editable).toBe(true);
    expect(state.row("zzz", "tgt")).toBeNull();
  });

  test("an empty input never reaches the server", async () => {
    const server = new FakeServer();
    const state = await openState(server);
    await state.addWord("   ", "src", "accepted");
    expect(server.calls.filter((c) => c.startsWith("addWord"))).toHaveLength(0);
    expect(state.addErrors["src"]).toBeTruthy();
  });
});

describe("finalize", () => {
  test("finalize closes the session, loads the report, and locks editing", async () => {
    const server = new FakeServer();
    const state = await openState(server);
    await state.setMark("srcw0", "src", "accepted");
    await state.finalizeSession([0, 1]);
    expect(state.session?.state).toBe("closed");
    expect(state.editable).toBe(false);
    expect(state.report?.session).toBe("s1");
    expect(state.card?.state).toBe("closed"); // card refreshed read-only
  });

  test("a closed session can still be browsed read-only", async () => {
    const server = new FakeServer();
    const state = await openState(server);
    await state.setMark("srcw0", "src", "accepted");
    await state.finalizeSession();
    await state.next();
    expect(state.card?.index).toBe(1);
    const calls = markCalls(server).length;
    await state.setMark("srcw0", "src", "rejected");
    expect(markCalls(server)).toHaveLength(calls); // no mutation when closed
  });
});

describe("concordance", () => {
  test("clicking a word fetches snippets and close hides them", async () => {
    const server = new FakeServer();
    const state = await openState(server);
    await state.showConcordance("srcw0", "src");
    expect(state.concordanceView?.snippets).toHaveLength(1);
    expect(state.concordanceView?.snippets[0]?.text).toContain("srcw0");
    state.hideConcordance();
    expect(state.concordanceView).toBeNull();
  });
});
