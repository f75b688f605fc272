/** Typed client for the review service. All state of record lives
 * server-side; this client only transports it. */

import type {
  DecisionRequest,
  QueueEntry,
  ReviewItemView,
  ReviewStats,
} from './types.js';

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number | null,
    readonly retryable: boolean,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ReviewApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    } catch (err) {
      // Network-level failure: the caller may retain and retry.
      throw new ApiError(`network failure: ${String(err)}`, null, true);
    }
    if (!response.ok) {
      const body = await response.text();
      throw new ApiError(`${path}: HTTP ${response.status}: ${body}`, response.status, response.status >= 500);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request('/health');
  }

  queue(status?: string): Promise<QueueEntry[]> {
    const suffix = status ? `?status=${encodeURIComponent(status)}` : '';
    return this.request(`/review/queue${suffix}`);
  }

  item(instanceId: string): Promise<ReviewItemView> {
    return this.request(`/review/item/${encodeURIComponent(instanceId)}`);
  }

  decide(instanceId: string, decision: DecisionRequest): Promise<ReviewItemView> {
    return this.request(`/review/item/${encodeURIComponent(instanceId)}/decision`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(decision),
    });
  }

  stats(): Promise<ReviewStats> {
    return this.request('/review/stats');
  }

  datasetSummary(): Promise<Record<string, unknown>> {
    return this.request('/dataset/summary');
  }
}
