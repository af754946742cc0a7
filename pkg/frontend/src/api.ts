/** Typed client for the authoring service API (/api/v1). */

export interface ExplanationLevel {
  level: number;
  text: string;
  origin: "generated" | "edited" | "human-authored";
  source_round: number | null;
}

export interface Challenge {
  distractors: string[];
  prompt_hint: string | null;
}

export interface CodeLine {
  number: number;
  text: string;
  structural: boolean;
  explanations: ExplanationLevel[];
  challenge: Challenge | null;
}

export interface ExampleDoc {
  schema_version: string;
  id: string;
  title: string;
  description: string;
  language_tag: string;
  created_at: string;
  updated_at: string;
  lines: CodeLine[];
}

export interface ExamplePayload {
  example: ExampleDoc;
  revision: number;
}

export interface ExampleSummary {
  id: string;
  title: string;
  language_tag: string;
  line_count: number;
  updated_at: string;
  revision: number;
}

export interface DroppedFragment {
  text: string;
  reason: string;
  line_number: number | null;
}

export interface StagedRound {
  round: number;
  by_line: Record<string, string>;
  dropped: DroppedFragment[];
}

export interface SimilarityReport {
  example_id: string;
  per_round: [number, number][];
  per_line: Record<string, [number, number][]>;
}

export type JobStatus =
  | "pending"
  | "round_running"
  | "awaiting_review"
  | "complete"
  | "failed";

export interface Job {
  example_id: string;
  status: JobStatus;
  rounds_done: number;
  transcript_ref: string;
  error: string | null;
  staged_rounds: StagedRound[];
  similarity: SimilarityReport | null;
}

export interface Templates {
  preamble: string;
  "format-contract": string;
  "new-round-directive": string;
}

export interface GenerateOptions {
  config?: {
    max_rounds?: number;
    include_description?: boolean;
    template_overrides?: Record<string, string>;
  };
  provider?: Record<string, unknown>;
}

export interface LineSelectionPayload {
  include?: boolean;
  edits?: Record<string, string>;
}

/** Service error carrying the HTTP status and the service's error code. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }

  get isVersionConflict(): boolean {
    return this.status === 409 && this.code === "VersionConflict";
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class WeatClient {
  constructor(
    readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let code = "HttpError";
      let detail = `${response.status} ${response.statusText}`;
      try {
        const payload = await response.json();
        code = payload.error ?? code;
        detail = payload.detail ?? JSON.stringify(payload);
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(response.status, code, detail);
    }
    if (response.status === 204) {
      return undefined as T;
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/healthz");
  }

  listExamples(): Promise<ExampleSummary[]> {
    return this.request<{ examples: ExampleSummary[] }>(
      "GET",
      "/api/v1/examples",
    ).then((payload) => payload.examples);
  }

  getExample(id: string): Promise<ExamplePayload> {
    return this.request("GET", `/api/v1/examples/${encodeURIComponent(id)}`);
  }

  createExample(input: {
    title: string;
    source: string;
    description?: string;
    language_tag?: string;
    id?: string;
  }): Promise<ExamplePayload> {
    return this.request("POST", "/api/v1/examples", input);
  }

  deleteExample(id: string): Promise<void> {
    return this.request("DELETE", `/api/v1/examples/${encodeURIComponent(id)}`);
  }

  generate(id: string, options: GenerateOptions = {}): Promise<{ job: Job }> {
    return this.request(
      "POST",
      `/api/v1/examples/${encodeURIComponent(id)}/generate`,
      options,
    );
  }

  getJob(id: string): Promise<{ job: Job }> {
    return this.request("GET", `/api/v1/examples/${encodeURIComponent(id)}/job`);
  }

  accept(
    id: string,
    selections: Record<string, LineSelectionPayload> | null,
  ): Promise<ExamplePayload> {
    return this.request(
      "POST",
      `/api/v1/examples/${encodeURIComponent(id)}/accept`,
      { selections },
    );
  }

  patchExplanation(
    id: string,
    line: number,
    level: number,
    text: string,
    revision: number,
  ): Promise<ExamplePayload> {
    return this.request(
      "PATCH",
      `/api/v1/examples/${encodeURIComponent(id)}/lines/${line}/explanations/${level}`,
      { text, revision },
    );
  }

  markChallenge(
    id: string,
    line: number,
    distractors: string[],
    promptHint: string | null,
    revision: number,
  ): Promise<ExamplePayload> {
    return this.request(
      "POST",
      `/api/v1/examples/${encodeURIComponent(id)}/challenge/${line}`,
      { distractors, prompt_hint: promptHint, revision },
    );
  }

  getTemplates(): Promise<Templates> {
    return this.request("GET", "/api/v1/templates");
  }

  exportUrl(id: string, format: "portable" | "pcex"): string {
    return `${this.baseUrl}/api/v1/examples/${encodeURIComponent(id)}/export?format=${format}`;
  }

  fetchExport(id: string, format: "portable" | "pcex"): Promise<string> {
    return this.fetchFn(this.exportUrl(id, format)).then((response) => {
      if (!response.ok) {
        throw new ApiError(response.status, "HttpError", "export failed");
      }
      return response.text();
    });
  }
}
