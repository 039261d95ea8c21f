/** Typed client for the model service JSON API.
 *
 * Every method is a single HTTP round trip; the client holds no state
 * beyond the base URL, so callers can reuse one instance everywhere.
 */

import type {
  EditOpWire,
  EditResponse,
  ImportanceResponse,
  PredictResponse,
  SceneSummary,
  Term,
  TermSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

/** The posted version is no longer head; refetch and redraft. */
export class StaleVersion extends ApiError {}

type FetchFn = typeof fetch;

export class ApiClient {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchFn = globalThis.fetch.bind(globalThis),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.base + path, init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = (await resp.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      if (resp.status === 409) throw new StaleVersion(409, detail);
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  headVersion(): Promise<{ version: number }> {
    return this.request("/api/head");
  }

  scenes(): Promise<SceneSummary[]> {
    return this.request("/api/scenes");
  }

  terms(version: number): Promise<TermSummary[]> {
    return this.request(`/api/model/${version}/terms`);
  }

  term(version: number, termId: string): Promise<Term> {
    return this.request(
      `/api/model/${version}/terms/${encodeURIComponent(termId)}`,
    );
  }

  submitEdits(version: number, ops: EditOpWire[]): Promise<EditResponse> {
    return this.request(`/api/model/${version}/edits`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(ops),
    });
  }

  predict(
    version: number,
    sceneId: string,
    threshold = 0.5,
  ): Promise<PredictResponse> {
    return this.request("/api/predict", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ version, scene_id: sceneId, threshold }),
    });
  }

  importance(
    version: number,
    sceneId: string,
    termId: string,
  ): Promise<ImportanceResponse> {
    const q = new URLSearchParams({
      version: String(version),
      scene_id: sceneId,
      term: termId,
    });
    return this.request(`/api/importance?${q}`);
  }
}
