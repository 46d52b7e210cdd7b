// Typed client for the proof service. Every shape here mirrors a server
// payload field for field; nothing is derived locally.

export interface GoalView {
  text: string;
  hypotheses: { name: string; formula: string }[];
  target: string;
}

export interface SessionView {
  id: string;
  goals: GoalView[];
  usedSorry: boolean;
  proved: boolean;
  history: string[];
}

export type SuggestionCategory = "ProofClosing" | "ValidStep";

export interface Suggestion {
  text: string;
  category: SuggestionCategory;
  score: number;
  remaining: string[];
}

export interface SuggestionSet {
  checked: boolean;
  suggestions: Suggestion[];
}

export interface SearchReply {
  status: "ProofFound" | "Exhausted" | "TimedOut";
  script: string[] | null;
  scriptText: string | null;
  expansions: number;
  elapsedMillis: number;
}

export interface PremiseEntry {
  name: string;
  module: string;
  score: number;
  inScope: boolean;
  annotation:
    | { signature: string; docstring: string | null }
    | { requiredImport: string; definitionSource: string };
}

export interface ErrorBody {
  kind: string;
  message: string;
  tacticErrorKind?: string;
}

/** Tool-level failure (HTTP 200 with an error body) or transport failure. */
export class ApiError extends Error {
  readonly kind: string;
  readonly status: number;
  readonly tacticErrorKind?: string;

  constructor(status: number, body: ErrorBody) {
    super(body.message);
    this.kind = body.kind;
    this.status = status;
    this.tacticErrorKind = body.tacticErrorKind;
  }
}

async function post(base: string, path: string, body: unknown): Promise<any> {
  const res = await fetch(base + path, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  return unwrap(res);
}

async function unwrap(res: Response): Promise<any> {
  let payload: any;
  try {
    payload = await res.json();
  } catch {
    throw new ApiError(res.status, { kind: "Transport", message: `HTTP ${res.status}` });
  }
  if (payload && typeof payload === "object" && payload.error) {
    throw new ApiError(res.status, payload.error as ErrorBody);
  }
  if (!res.ok) {
    throw new ApiError(res.status, { kind: "Transport", message: `HTTP ${res.status}` });
  }
  return payload;
}

export class ProofApi {
  constructor(readonly base: string = "") {}

  openGoal(goal: string): Promise<SessionView> {
    return post(this.base, "/api/session", { goal });
  }

  openTheorem(theorem: string): Promise<SessionView> {
    return post(this.base, "/api/session", { theorem });
  }

  async view(id: string): Promise<SessionView> {
    const res = await fetch(`${this.base}/api/session/${id}`);
    return unwrap(res);
  }

  tactic(id: string, text: string): Promise<SessionView> {
    return post(this.base, `/api/session/${id}/tactic`, { text });
  }

  undo(id: string): Promise<SessionView> {
    return post(this.base, `/api/session/${id}/undo`, {});
  }

  suggest(id: string): Promise<SuggestionSet> {
    return post(this.base, `/api/session/${id}/suggest`, {});
  }

  search(id: string, limits?: { maxExpansions?: number }): Promise<SearchReply> {
    return post(this.base, `/api/session/${id}/search`, limits ? { limits } : {});
  }

  async premises(id: string, k: number): Promise<PremiseEntry[]> {
    const reply = await post(this.base, `/api/session/${id}/premises`, { k });
    return reply.premises;
  }
}
