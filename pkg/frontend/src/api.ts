import { AnnotationBody, ClaimView, QueueEntry, Stats } from "./types";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`API error ${status}: ${detail}`);
  }
}

/** The four documented endpoints; the UI issues no other requests. */
export interface ReviewApi {
  getQueue(): Promise<QueueEntry[]>;
  getClaim(id: string): Promise<ClaimView>;
  postAnnotation(id: string, body: AnnotationBody): Promise<unknown>;
  getStats(): Promise<Stats>;
}

/** Thin typed client over the review API. */
export class ApiClient implements ReviewApi {
  constructor(private readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        if (typeof body.detail === "string") detail = body.detail;
      } catch {
        // keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  async getQueue(): Promise<QueueEntry[]> {
    const data = await this.request<{ entries: QueueEntry[] }>("/queue");
    return data.entries;
  }

  getClaim(id: string): Promise<ClaimView> {
    return this.request<ClaimView>(`/claims/${encodeURIComponent(id)}`);
  }

  postAnnotation(id: string, body: AnnotationBody): Promise<unknown> {
    return this.request(`/claims/${encodeURIComponent(id)}/annotations`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getStats(): Promise<Stats> {
    return this.request<Stats>("/stats");
  }
}
