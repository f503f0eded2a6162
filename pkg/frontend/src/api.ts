// Thin typed client over the scoring service. The fetch function is
// injectable so tests can serve fixture documents.

import { CaseDocument, EpochDetail, ModelInfo } from "./types";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(private base: string = "",
              private fetchFn: FetchLike = (...args) => fetch(...args)) {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(this.base + path);
    if (!resp.ok) {
      let detail = `${resp.status}`;
      try {
        detail = ((await resp.json()) as { detail?: string }).detail ?? detail;
      } catch {
        // non-JSON error body; keep the status code
      }
      throw new Error(`GET ${path}: ${detail}`);
    }
    return (await resp.json()) as T;
  }

  getCase(caseId: string): Promise<CaseDocument> {
    return this.getJson(`/cases/${caseId}`);
  }

  getEpoch(caseId: string, t: number): Promise<EpochDetail> {
    return this.getJson(`/cases/${caseId}/epochs/${t}`);
  }

  async listCases(): Promise<CaseDocument[]> {
    const doc = await this.getJson<{ cases: CaseDocument[] }>(`/cases`);
    return doc.cases;
  }

  async listModels(): Promise<ModelInfo[]> {
    const doc = await this.getJson<{ models: ModelInfo[] }>(`/models`);
    return doc.models;
  }

  async startScoring(caseId: string, model: string): Promise<void> {
    const resp = await this.fetchFn(`${this.base}/cases/${caseId}/score`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ model }),
    });
    if (!resp.ok) throw new Error(`score: ${resp.status}`);
  }
}
