/** The authoring screen: example list, code editor with per-line markers,
 * generation dialog with an editable prompt, staged review, challenges,
 * and exports. All state reaches the server through the service API. */

import {
  ApiError,
  CodeLine,
  ExamplePayload,
  ExampleSummary,
  Job,
  Templates,
  WeatClient,
} from "./api";
import { pollJob } from "./poll";
import {
  ReviewLine,
  acceptSelections,
  reviewLinesFromJob,
  setEditedText,
  setInclude,
} from "./selections";

export interface AppOptions {
  /** Job-status poll period; the default matches the authoring screen. */
  pollIntervalMs?: number;
}

interface PendingDraft {
  line: number;
  level: number;
  text: string;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    node.setAttribute(name, value);
  }
  node.append(...children);
  return node;
}

export class AuthoringApp {
  private summaries: ExampleSummary[] = [];
  private current: ExamplePayload | null = null;
  private selectedLine: number | null = null;
  private templates: Templates | null = null;
  private review: ReviewLine[] | null = null;
  private dirty = false;
  private pendingDraft: PendingDraft | null = null;
  private readonly pollIntervalMs: number;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: WeatClient,
    options: AppOptions = {},
  ) {
    this.pollIntervalMs = options.pollIntervalMs ?? 2000;
    this.buildSkeleton();
    window.addEventListener("beforeunload", (event) => {
      if (this.dirty) {
        event.preventDefault();
      }
    });
  }

  async start(): Promise<void> {
    await this.refreshList();
    this.templates = await this.client.getTemplates();
  }

  // -- skeleton --------------------------------------------------------

  private buildSkeleton(): void {
    this.root.innerHTML = "";
    this.root.append(
      el(
        "header",
        {},
        el("h1", {}, "weat authoring"),
        el("span", { "data-testid": "dirty-flag", class: "dirty hidden" }, "unsaved edits"),
      ),
      el(
        "div",
        { class: "error hidden", "data-testid": "error-bar" },
        el("span", { "data-testid": "error-text" }),
        el("button", { "data-testid": "reload-retry", class: "hidden" }, "Reload and retry"),
        el("button", { "data-testid": "dismiss-error" }, "Dismiss"),
      ),
      el(
        "main",
        {},
        el(
          "aside",
          {},
          el("h2", {}, "Examples"),
          el("ul", { "data-testid": "example-list" }),
          this.buildCreateForm(),
        ),
        el(
          "section",
          { class: "editor hidden", "data-testid": "editor" },
          el(
            "div",
            { class: "meta" },
            el("h2", { "data-testid": "example-title" }),
            el("p", { "data-testid": "example-description" }),
            el(
              "div",
              { class: "actions" },
              el("button", { "data-testid": "open-generate" }, "Generate explanations"),
              el("a", { "data-testid": "export-portable", download: "" }, "Export portable"),
              el("a", { "data-testid": "export-pcex", download: "" }, "Export PCEX"),
              el("button", { "data-testid": "delete-example" }, "Delete"),
            ),
          ),
          el(
            "div",
            { class: "panes" },
            el("ol", { class: "code", "data-testid": "code-pane" }),
            el("div", { class: "line-panel", "data-testid": "line-panel" }),
          ),
        ),
      ),
      this.buildGenerateDialog(),
    );

    this.query("dismiss-error").addEventListener("click", () => this.clearError());
    this.query("reload-retry").addEventListener("click", () => {
      void this.reloadAndRetry();
    });
    this.query("open-generate").addEventListener("click", () => this.openGenerateDialog());
    this.query("delete-example").addEventListener("click", () => {
      void this.deleteCurrent();
    });
  }

  private buildCreateForm(): HTMLFormElement {
    const form = el("form", { "data-testid": "create-form" });
    form.append(
      el("input", { name: "id", placeholder: "id (optional)" }),
      el("input", { name: "title", placeholder: "Title" }),
      el("textarea", { name: "description", placeholder: "Problem description" }),
      el("textarea", { name: "source", placeholder: "Source code", rows: "8" }),
      el("button", { type: "submit", "data-testid": "create-button" }, "Create example"),
    );
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.createExample(form);
    });
    return form;
  }

  private buildGenerateDialog(): HTMLElement {
    const dialog = el("div", { class: "overlay hidden", "data-testid": "generate-dialog" });
    const slots: [keyof Templates, string][] = [
      ["preamble", "Role preamble"],
      ["format-contract", "Output format contract"],
      ["new-round-directive", "New-round directive"],
    ];
    const templateFields = slots.map(([slot, label]) =>
      el(
        "label",
        { class: "template-slot" },
        `${label} `,
        el("button", { type: "button", "data-testid": `restore-${slot}` }, "restore default"),
        el("textarea", { "data-testid": `template-${slot}`, rows: "4" }),
      ),
    );
    dialog.append(
      el(
        "div",
        { class: "dialog" },
        el("h2", {}, "Generate explanations"),
        el(
          "p",
          { class: "hint" },
          "The prompt below is the default; tune it if you like. Edits apply to this run only.",
        ),
        ...templateFields,
        el(
          "label",
          {},
          el("input", { type: "checkbox", "data-testid": "include-description", checked: "" }),
          " include the problem description in the prompt",
        ),
        el(
          "label",
          {},
          "rounds ",
          el("input", { type: "number", "data-testid": "max-rounds", value: "2", min: "1" }),
        ),
        el("button", { "data-testid": "run-generate" }, "Generate"),
        el("p", { "data-testid": "job-status" }),
        el("div", { "data-testid": "review-panel", class: "review hidden" }),
        el("button", { "data-testid": "close-dialog" }, "Close"),
      ),
    );
    dialog.querySelector('[data-testid="run-generate"]')!.addEventListener("click", () => {
      void this.runGeneration();
    });
    dialog.querySelector('[data-testid="close-dialog"]')!.addEventListener("click", () => {
      dialog.classList.add("hidden");
    });
    for (const [slot] of slots) {
      dialog
        .querySelector(`[data-testid="restore-${slot}"]`)!
        .addEventListener("click", () => {
          const field = this.query<HTMLTextAreaElement>(`template-${slot}`);
          field.value = this.templates ? this.templates[slot] : "";
          this.markDirty();
        });
      dialog
        .querySelector(`[data-testid="template-${slot}"]`)!
        .addEventListener("input", () => this.markDirty());
    }
    return dialog;
  }

  // -- helpers ---------------------------------------------------------

  query<T extends HTMLElement = HTMLElement>(testId: string): T {
    const node = this.root.querySelector(`[data-testid="${testId}"]`);
    if (!node) {
      throw new Error(`missing element: ${testId}`);
    }
    return node as T;
  }

  private markDirty(): void {
    this.dirty = true;
    this.query("dirty-flag").classList.remove("hidden");
  }

  private clearDirty(): void {
    this.dirty = false;
    this.query("dirty-flag").classList.add("hidden");
  }

  private showError(error: unknown, retryable = false): void {
    const bar = this.query("error-bar");
    const text =
      error instanceof ApiError
        ? `${error.status} ${error.code}: ${error.message}`
        : String(error);
    this.query("error-text").textContent = text;
    bar.classList.remove("hidden");
    this.query("reload-retry").classList.toggle("hidden", !retryable);
  }

  private clearError(): void {
    this.query("error-bar").classList.add("hidden");
    this.query("reload-retry").classList.add("hidden");
  }

  private async guard<T>(work: () => Promise<T>): Promise<T | undefined> {
    try {
      const result = await work();
      this.clearError();
      return result;
    } catch (error) {
      const conflict = error instanceof ApiError && error.isVersionConflict;
      this.showError(error, conflict);
      return undefined;
    }
  }

  // -- example list and creation ----------------------------------------

  async refreshList(): Promise<void> {
    const summaries = await this.guard(() => this.client.listExamples());
    if (!summaries) {
      return;
    }
    this.summaries = summaries;
    const list = this.query("example-list");
    list.innerHTML = "";
    for (const summary of this.summaries) {
      const item = el(
        "li",
        { "data-testid": `example-item-${summary.id}` },
        el(
          "button",
          {},
          `${summary.title} (${summary.line_count} lines, rev ${summary.revision})`,
        ),
      );
      item.querySelector("button")!.addEventListener("click", () => {
        void this.openExample(summary.id);
      });
      list.append(item);
    }
  }

  private async createExample(form: HTMLFormElement): Promise<void> {
    const field = (name: string) =>
      (form.querySelector(`[name="${name}"]`) as HTMLInputElement | HTMLTextAreaElement).value;
    const created = await this.guard(() =>
      this.client.createExample({
        title: field("title"),
        description: field("description"),
        source: field("source"),
        id: field("id") || undefined,
      }),
    );
    if (!created) {
      return;
    }
    form.reset();
    await this.refreshList();
    this.setCurrent(created);
  }

  private async deleteCurrent(): Promise<void> {
    if (!this.current) {
      return;
    }
    const id = this.current.example.id;
    const done = await this.guard(async () => {
      await this.client.deleteExample(id);
      return true;
    });
    if (!done) {
      return;
    }
    this.current = null;
    this.selectedLine = null;
    this.query("editor").classList.add("hidden");
    await this.refreshList();
  }

  // -- editor ------------------------------------------------------------

  async openExample(id: string): Promise<void> {
    const payload = await this.guard(() => this.client.getExample(id));
    if (payload) {
      this.setCurrent(payload);
    }
  }

  private setCurrent(payload: ExamplePayload): void {
    this.current = payload;
    if (
      this.selectedLine !== null &&
      this.selectedLine > payload.example.lines.length
    ) {
      this.selectedLine = null;
    }
    this.renderEditor();
  }

  private renderEditor(): void {
    if (!this.current) {
      return;
    }
    const { example } = this.current;
    this.query("editor").classList.remove("hidden");
    this.query("example-title").textContent = example.title;
    this.query("example-description").textContent = example.description;
    this.query<HTMLAnchorElement>("export-portable").setAttribute(
      "href",
      this.client.exportUrl(example.id, "portable"),
    );
    this.query<HTMLAnchorElement>("export-pcex").setAttribute(
      "href",
      this.client.exportUrl(example.id, "pcex"),
    );

    const pane = this.query("code-pane");
    pane.innerHTML = "";
    for (const line of example.lines) {
      const classes = ["code-line"];
      if (line.explanations.length > 0) {
        classes.push("explained");
      }
      if (line.number === this.selectedLine) {
        classes.push("selected");
      }
      const row = el(
        "li",
        { "data-testid": `code-line-${line.number}`, class: classes.join(" ") },
        el("span", { class: "num" }, String(line.number)),
        el("code", {}, line.text || " "),
      );
      if (line.structural) {
        row.append(
          el(
            "span",
            { class: "warn", title: "structural line" },
            "likely unnecessary explanation",
          ),
        );
      }
      if (line.challenge) {
        row.append(el("span", { class: "challenge-badge" }, "challenge"));
      }
      row.addEventListener("click", () => {
        this.selectedLine = line.number;
        this.renderEditor();
      });
      pane.append(row);
    }
    this.renderLinePanel();
  }

  private renderLinePanel(): void {
    const panel = this.query("line-panel");
    panel.innerHTML = "";
    if (!this.current || this.selectedLine === null) {
      panel.append(el("p", { class: "hint" }, "Select a line to edit its explanations."));
      return;
    }
    const line = this.current.example.lines[this.selectedLine - 1];
    panel.append(el("h3", {}, `Line ${line.number}`));
    panel.append(el("pre", {}, line.text));

    for (const levelEntry of line.explanations) {
      const editor = el("textarea", {
        "data-testid": `level-text-${line.number}-${levelEntry.level}`,
        rows: "3",
      }) as HTMLTextAreaElement;
      editor.value = levelEntry.text;
      editor.addEventListener("input", () => this.markDirty());
      const save = el(
        "button",
        { "data-testid": `save-level-${line.number}-${levelEntry.level}` },
        "Save",
      );
      save.addEventListener("click", () => {
        void this.saveLevel(line, levelEntry.level, editor.value);
      });
      panel.append(
        el(
          "div",
          { class: "level" },
          el("span", { class: "level-tag" }, `level ${levelEntry.level} (${levelEntry.origin})`),
          editor,
          save,
        ),
      );
    }

    const newEditor = el("textarea", {
      "data-testid": `new-level-text-${line.number}`,
      rows: "3",
      placeholder: "New explanation level",
    }) as HTMLTextAreaElement;
    newEditor.addEventListener("input", () => this.markDirty());
    const add = el(
      "button",
      { "data-testid": `add-level-${line.number}` },
      "Add level",
    );
    add.addEventListener("click", () => {
      void this.saveLevel(line, line.explanations.length + 1, newEditor.value);
    });
    panel.append(el("div", { class: "level new" }, newEditor, add));

    const challengeBox = el("textarea", {
      "data-testid": `distractors-${line.number}`,
      rows: "3",
      placeholder: "One distractor per line",
    }) as HTMLTextAreaElement;
    if (line.challenge) {
      challengeBox.value = line.challenge.distractors.join("\n");
    }
    const markButton = el(
      "button",
      { "data-testid": `mark-challenge-${line.number}` },
      "Mark as challenge",
    );
    markButton.addEventListener("click", () => {
      void this.markChallenge(line, challengeBox.value);
    });
    panel.append(
      el(
        "div",
        { class: "challenge" },
        el("h4", {}, "Challenge"),
        challengeBox,
        markButton,
      ),
    );

    if (this.pendingDraft && this.pendingDraft.line === line.number) {
      const field = panel.querySelector(
        `[data-testid="level-text-${line.number}-${this.pendingDraft.level}"]`,
      ) as HTMLTextAreaElement | null;
      if (field) {
        field.value = this.pendingDraft.text;
        this.markDirty();
      }
      this.pendingDraft = null;
    }
  }

  private async saveLevel(line: CodeLine, level: number, text: string): Promise<void> {
    if (!this.current) {
      return;
    }
    const { example, revision } = this.current;
    const saved = await this.guardConflict(
      () => this.client.patchExplanation(example.id, line.number, level, text, revision),
      { line: line.number, level, text },
    );
    if (saved) {
      this.clearDirty();
      this.setCurrent(saved);
    }
  }

  private async markChallenge(line: CodeLine, box: string): Promise<void> {
    if (!this.current) {
      return;
    }
    const distractors = box
      .split("\n")
      .map((entry) => entry.trim())
      .filter(Boolean);
    const { example, revision } = this.current;
    const saved = await this.guardConflict(
      () => this.client.markChallenge(example.id, line.number, distractors, null, revision),
      null,
    );
    if (saved) {
      this.clearDirty();
      this.setCurrent(saved);
    }
  }

  /** Like guard(), but a version conflict stashes the draft for the
   * reload-and-retry flow instead of dropping it. */
  private async guardConflict(
    work: () => Promise<ExamplePayload>,
    draft: PendingDraft | null,
  ): Promise<ExamplePayload | undefined> {
    try {
      const result = await work();
      this.clearError();
      return result;
    } catch (error) {
      if (error instanceof ApiError && error.isVersionConflict) {
        this.pendingDraft = draft;
        this.showError(error, true);
      } else {
        this.showError(error);
      }
      return undefined;
    }
  }

  private async reloadAndRetry(): Promise<void> {
    if (!this.current) {
      return;
    }
    const payload = await this.guard(() => this.client.getExample(this.current!.example.id));
    if (payload) {
      this.clearError();
      this.setCurrent(payload); // renderLinePanel re-applies pendingDraft
    }
  }

  // -- generation dialog -------------------------------------------------

  openGenerateDialog(): void {
    if (!this.templates) {
      this.showError("templates not loaded yet");
      return;
    }
    const dialog = this.query("generate-dialog");
    for (const slot of ["preamble", "format-contract", "new-round-directive"] as const) {
      this.query<HTMLTextAreaElement>(`template-${slot}`).value = this.templates[slot];
    }
    this.query("job-status").textContent = "";
    this.query("review-panel").classList.add("hidden");
    this.query("review-panel").innerHTML = "";
    this.review = null;
    dialog.classList.remove("hidden");
  }

  private templateOverrides(): Record<string, string> {
    if (!this.templates) {
      return {};
    }
    const overrides: Record<string, string> = {};
    for (const slot of ["preamble", "format-contract", "new-round-directive"] as const) {
      const value = this.query<HTMLTextAreaElement>(`template-${slot}`).value;
      if (value !== this.templates[slot]) {
        overrides[slot] = value;
      }
    }
    return overrides;
  }

  async runGeneration(): Promise<void> {
    if (!this.current) {
      return;
    }
    const id = this.current.example.id;
    const status = this.query("job-status");
    const overrides = this.templateOverrides();
    const options = {
      config: {
        max_rounds: Number(this.query<HTMLInputElement>("max-rounds").value) || 2,
        include_description:
          this.query<HTMLInputElement>("include-description").checked,
        ...(Object.keys(overrides).length > 0
          ? { template_overrides: overrides }
          : {}),
      },
    };
    const started = await this.guard(() => this.client.generate(id, options));
    if (!started) {
      return;
    }
    status.textContent = "generating...";
    try {
      const job = await pollJob(this.client, id, {
        intervalMs: this.pollIntervalMs,
        onUpdate: (update) => {
          status.textContent = `status: ${update.status}, rounds done: ${update.rounds_done}`;
        },
      });
      status.textContent = `ready for review (${job.rounds_done} rounds)`;
      this.review = reviewLinesFromJob(job);
      this.renderReview(job);
    } catch (error) {
      this.showError(error);
      status.textContent = "generation failed";
    }
  }

  private renderReview(job: Job): void {
    const panel = this.query("review-panel");
    panel.innerHTML = "";
    panel.classList.remove("hidden");
    if (!this.review) {
      return;
    }
    if (job.similarity && job.similarity.per_round.length > 0) {
      const scores = job.similarity.per_round
        .map(([round, score]) => `round ${round}: ${score.toFixed(3)}`)
        .join(", ");
      panel.append(el("p", { class: "hint" }, `similarity to previous round - ${scores}`));
    }
    for (const entry of this.review) {
      const row = el("div", {
        class: "review-line",
        "data-testid": `review-line-${entry.line}`,
      });
      const checkbox = el("input", {
        type: "checkbox",
        "data-testid": `review-include-${entry.line}`,
      }) as HTMLInputElement;
      checkbox.checked = entry.include;
      checkbox.addEventListener("change", () => {
        this.review = setInclude(this.review!, entry.line, checkbox.checked);
      });
      row.append(
        el("label", {}, checkbox, ` line ${entry.line}`),
      );
      for (const staged of entry.texts) {
        const editor = el("textarea", {
          "data-testid": `review-text-${entry.line}-${staged.round}`,
          rows: "2",
        }) as HTMLTextAreaElement;
        editor.value = staged.edited ?? staged.original;
        editor.addEventListener("input", () => {
          this.review = setEditedText(
            this.review!,
            entry.line,
            staged.round,
            editor.value,
          );
          this.markDirty();
        });
        row.append(
          el("div", { class: "staged" }, el("span", {}, `round ${staged.round}`), editor),
        );
      }
      panel.append(row);
    }
    const accept = el(
      "button",
      { "data-testid": "use-explanations" },
      "Use the Explanations",
    );
    accept.addEventListener("click", () => {
      void this.acceptReview();
    });
    panel.append(accept);
  }

  async acceptReview(): Promise<void> {
    if (!this.current || !this.review) {
      return;
    }
    const id = this.current.example.id;
    const payload = acceptSelections(this.review);
    const accepted = await this.guard(() => this.client.accept(id, payload));
    if (!accepted) {
      return;
    }
    this.review = null;
    this.clearDirty();
    this.query("generate-dialog").classList.add("hidden");
    this.setCurrent(accepted);
    await this.refreshList();
  }
}

export function createApp(
  root: HTMLElement,
  client: WeatClient,
  options: AppOptions = {},
): AuthoringApp {
  return new AuthoringApp(root, client, options);
}
