// Session controller: owns the one busy flag, wires panel renders to API
// calls, and never derives proof state locally. Every rendered goal string
// comes from the most recent server payload.

import { ApiError, ProofApi, SessionView, Suggestion } from "./api.js";
import {
  el,
  renderGoalPanel,
  renderPremises,
  renderScript,
  renderSearchPending,
  renderSearchResult,
  renderSuggestions,
  showToast,
} from "./panels.js";

export const SEARCH_POLL_MS = 500;
const PREMISE_COUNT = 8;

export class ProofApp {
  readonly root: HTMLElement;
  private readonly api: ProofApi;
  private view: SessionView | null = null;
  private busy = false;

  private goalPanel!: HTMLElement;
  private suggestPanel!: HTMLElement;
  private searchPanel!: HTMLElement;
  private premisePanel!: HTMLElement;
  private scriptPane!: HTMLElement;
  private toastHost!: HTMLElement;
  private sessionLabel!: HTMLElement;
  private controls: HTMLButtonElement[] = [];

  constructor(api: ProofApi, root: HTMLElement) {
    this.api = api;
    this.root = root;
    this.buildShell();
  }

  get sessionId(): string | null {
    return this.view ? this.view.id : null;
  }

  get isBusy(): boolean {
    return this.busy;
  }

  // -- shell ---------------------------------------------------------------

  private buildShell(): void {
    const shell = el("div", "copilot");

    const header = el("header", "top-bar");
    const openForm = el("form", "open-form");
    const goalInput = el("input", "goal-input");
    goalInput.placeholder = "h : A /\\ B ⊢ B /\\ A";
    const openGoal = this.button("open-goal", "open goal", () =>
      this.openGoal(goalInput.value),
    );
    const theoremInput = el("input", "theorem-input");
    theoremInput.placeholder = "theorem name";
    const openTheorem = this.button("open-theorem", "open", () =>
      this.openTheorem(theoremInput.value),
    );
    openForm.addEventListener("submit", (e) => e.preventDefault());
    openForm.append(goalInput, openGoal, theoremInput, openTheorem);
    this.sessionLabel = el("span", "session-label", "no session");
    header.append(openForm, this.sessionLabel);

    const main = el("main", "panes");
    const left = el("section", "prover");
    this.goalPanel = el("div", "goal-panel");
    const tacticForm = el("form", "tactic-form");
    const tacticInput = el("input", "tactic-input");
    tacticInput.placeholder = "intro h";
    const applyButton = this.button("tactic-apply", "apply", () => {
      const text = tacticInput.value.trim();
      if (text) void this.applyTactic(text).then((ok) => {
        if (ok) tacticInput.value = "";
      });
    });
    const undoButton = this.button("undo", "undo", () => this.undo());
    tacticForm.addEventListener("submit", (e) => {
      e.preventDefault();
      applyButton.click();
    });
    tacticForm.append(tacticInput, applyButton, undoButton);
    this.scriptPane = el("div", "script-pane");
    left.append(this.goalPanel, tacticForm, this.scriptPane);

    const right = el("section", "tools");
    const toolBar = el("div", "tool-bar");
    toolBar.append(
      this.button("suggest", "suggest", () => this.suggest()),
      this.button("search", "search", () => this.runSearch()),
      this.button("premises", "premises", () => this.showPremises()),
    );
    this.suggestPanel = el("div", "suggest-panel");
    this.searchPanel = el("div", "search-panel");
    this.premisePanel = el("div", "premise-panel");
    right.append(toolBar, this.suggestPanel, this.searchPanel, this.premisePanel);

    main.append(left, right);
    this.toastHost = el("div", "toast-host");
    shell.append(header, main, this.toastHost);
    this.root.appendChild(shell);

    this.goalPanel.appendChild(el("div", "empty", "open a session to begin"));
    this.refreshControls();
  }

  private button(
    className: string,
    label: string,
    onClick: () => void,
  ): HTMLButtonElement {
    const b = el("button", className, label);
    b.type = "button";
    b.addEventListener("click", onClick);
    this.controls.push(b);
    return b;
  }

  private refreshControls(): void {
    const noSession = this.view === null;
    for (const b of this.controls) {
      const opensSession =
        b.classList.contains("open-goal") || b.classList.contains("open-theorem");
      b.disabled = this.busy || (noSession && !opensSession);
    }
  }

  // -- busy gate -----------------------------------------------------------

  private async withBusy<T>(work: () => Promise<T>): Promise<T | undefined> {
    if (this.busy) return undefined;
    this.busy = true;
    this.refreshControls();
    try {
      return await work();
    } catch (e) {
      this.reportError(e);
      return undefined;
    } finally {
      this.busy = false;
      this.refreshControls();
    }
  }

  private reportError(e: unknown): void {
    const message =
      e instanceof ApiError ? `${e.kind}: ${e.message}` : String(e);
    showToast(this.toastHost, message);
  }

  // -- session -------------------------------------------------------------

  async openGoal(goalText: string): Promise<void> {
    if (!goalText.trim()) return;
    await this.withBusy(async () => {
      this.setView(await this.api.openGoal(goalText));
    });
  }

  async openTheorem(name: string): Promise<void> {
    if (!name.trim()) return;
    await this.withBusy(async () => {
      this.setView(await this.api.openTheorem(name));
    });
  }

  private setView(view: SessionView): void {
    this.view = view;
    this.sessionLabel.textContent = view.proved
      ? `session ${view.id.slice(0, 8)} (proved)`
      : `session ${view.id.slice(0, 8)}`;
    renderGoalPanel(this.goalPanel, view.goals);
    renderScript(this.scriptPane, view.history);
    this.refreshControls();
  }

  // -- proof actions ---------------------------------------------------------

  /** Apply tactic text; resolves true when the server accepted it. */
  async applyTactic(text: string): Promise<boolean> {
    const result = await this.withBusy(async () => {
      const view = await this.api.tactic(this.requireSession(), text);
      this.setView(view);
      // a state change invalidates tool output computed against the old state
      this.suggestPanel.textContent = "";
      this.searchPanel.textContent = "";
      return true;
    });
    return result === true;
  }

  async undo(): Promise<void> {
    await this.withBusy(async () => {
      const id = this.requireSession();
      this.setView(await this.api.undo(id));
      this.suggestPanel.textContent = "";
      this.searchPanel.textContent = "";
    });
  }

  async suggest(): Promise<void> {
    await this.withBusy(async () => {
      const id = this.requireSession();
      const set = await this.api.suggest(id);
      renderSuggestions(this.suggestPanel, set, (s: Suggestion) => {
        void this.applyTactic(s.text);
      });
    });
  }

  async runSearch(): Promise<void> {
    await this.withBusy(async () => {
      const id = this.requireSession();
      const started = Date.now();
      renderSearchPending(this.searchPanel, 0);
      const ticker = setInterval(() => {
        renderSearchPending(this.searchPanel, Date.now() - started);
      }, SEARCH_POLL_MS);
      try {
        const reply = await this.api.search(id);
        renderSearchResult(this.searchPanel, reply, (scriptText) => {
          void this.applyTactic(scriptText);
        });
      } finally {
        clearInterval(ticker);
      }
    });
  }

  async showPremises(): Promise<void> {
    await this.withBusy(async () => {
      const id = this.requireSession();
      renderPremises(this.premisePanel, await this.api.premises(id, PREMISE_COUNT));
    });
  }

  private requireSession(): string {
    if (!this.view) throw new Error("no open session");
    return this.view.id;
  }
}
