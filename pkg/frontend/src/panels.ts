// Pure DOM builders for each panel. Every function renders server payloads
// verbatim; no ordering, filtering, or state lives here.

import {
  GoalView,
  PremiseEntry,
  SearchReply,
  Suggestion,
  SuggestionSet,
} from "./api.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function replaceChildren(container: HTMLElement, ...nodes: HTMLElement[]): void {
  container.textContent = "";
  for (const node of nodes) container.appendChild(node);
}

// -- goals -------------------------------------------------------------------

export function renderGoalPanel(container: HTMLElement, goals: GoalView[]): void {
  if (goals.length === 0) {
    replaceChildren(container, el("div", "no-goals", "No goals"));
    return;
  }
  const blocks = goals.map((goal, i) => {
    const block = el("div", "goal");
    block.appendChild(el("div", "goal-index", `goal ${i + 1} of ${goals.length}`));
    for (const hyp of goal.hypotheses) {
      const line = el("div", "hyp");
      line.appendChild(el("span", "hyp-name", hyp.name));
      line.appendChild(el("span", "hyp-sep", " : "));
      line.appendChild(el("span", "hyp-formula", hyp.formula));
      block.appendChild(line);
    }
    const target = el("div", "target");
    target.appendChild(el("span", "turnstile", "⊢ "));
    target.appendChild(el("span", "target-formula", goal.target));
    block.appendChild(target);
    return block;
  });
  replaceChildren(container, ...blocks);
}

// -- suggestions -------------------------------------------------------------

const CATEGORY_CLASS: Record<string, string> = {
  ProofClosing: "suggestion closing",
  ValidStep: "suggestion step",
};

export function renderSuggestions(
  container: HTMLElement,
  set: SuggestionSet,
  onPick: (s: Suggestion) => void,
): void {
  if (set.suggestions.length === 0) {
    replaceChildren(container, el("div", "empty", "no suggestions"));
    return;
  }
  const items = set.suggestions.map((s) => {
    const item = el("button", CATEGORY_CLASS[s.category] ?? "suggestion");
    item.type = "button";
    item.appendChild(el("span", "suggestion-text", s.text));
    item.appendChild(el("span", "suggestion-score", s.score.toFixed(2)));
    item.title =
      s.remaining.length === 0
        ? "closes the goal"
        : `leaves ${s.remaining.length} goal(s)`;
    item.addEventListener("click", () => onPick(s));
    return item;
  });
  replaceChildren(container, ...items);
}

// -- search ------------------------------------------------------------------

export function renderSearchResult(
  container: HTMLElement,
  reply: SearchReply,
  onInsert: (scriptText: string) => void,
): void {
  const line = el(
    "div",
    "search-status",
    `${reply.status} after ${reply.expansions} expansions (${reply.elapsedMillis} ms)`,
  );
  if (reply.status === "ProofFound" && reply.scriptText) {
    const script = reply.scriptText;
    const code = el("code", "search-script", script);
    const insert = el("button", "insert-proof", "insert proof");
    insert.type = "button";
    insert.addEventListener("click", () => onInsert(script));
    replaceChildren(container, line, code, insert);
  } else {
    replaceChildren(container, line);
  }
}

export function renderSearchPending(container: HTMLElement, elapsedMs: number): void {
  replaceChildren(
    container,
    el("div", "search-status pending", `searching... ${(elapsedMs / 1000).toFixed(1)}s`),
  );
}

// -- premises ----------------------------------------------------------------

export function renderPremises(container: HTMLElement, entries: PremiseEntry[]): void {
  if (entries.length === 0) {
    replaceChildren(container, el("div", "empty", "no premises"));
    return;
  }
  const items = entries.map((p) => {
    const item = el("div", p.inScope ? "premise in-scope" : "premise out-of-scope");
    const head = el("div", "premise-head");
    head.appendChild(el("span", "premise-name", p.name));
    head.appendChild(el("span", "premise-score", p.score.toFixed(3)));
    item.appendChild(head);
    if ("signature" in p.annotation) {
      item.appendChild(el("div", "premise-signature", p.annotation.signature));
      if (p.annotation.docstring) {
        item.appendChild(el("div", "premise-doc", p.annotation.docstring));
      }
    } else {
      item.appendChild(
        el("div", "premise-import", `import ${p.annotation.requiredImport}`),
      );
      item.appendChild(el("pre", "premise-source", p.annotation.definitionSource));
    }
    return item;
  });
  replaceChildren(container, ...items);
}

// -- script pane and toast ---------------------------------------------------

export function renderScript(container: HTMLElement, history: string[]): void {
  if (history.length === 0) {
    replaceChildren(container, el("div", "empty", "no steps yet"));
    return;
  }
  replaceChildren(container, ...history.map((t) => el("div", "script-step", t)));
}

export function showToast(container: HTMLElement, message: string): void {
  const toast = el("div", "toast", message);
  container.appendChild(toast);
  setTimeout(() => toast.remove(), 4000);
}
