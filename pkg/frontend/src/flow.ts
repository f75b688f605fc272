/** Headless review-flow controller: queue paging, decision submission with
 * offline retention, and conflict detection. The DOM layer renders this
 * state; tests drive it directly.
 *
 * Decisions that fail on network errors are retained locally and retried;
 * the item's displayed state only changes after the server acknowledges
 * (the server's reply is the state of record). A item whose history grew
 * behind our back is flagged as conflicted so the UI can prompt a reload.
 */

import { ApiError, ReviewApi } from './api.js';
import type { DecisionRequest, QueueEntry, ReviewItemView, ReviewStats } from './types.js';

export interface PendingDecision {
  instanceId: string;
  decision: DecisionRequest;
  attempts: number;
}

export class ReviewFlow {
  private queueEntries: QueueEntry[] = [];
  private index = 0;
  private item: ReviewItemView | null = null;
  private lastSeenHistory = new Map<string, number>();
  readonly pending: PendingDecision[] = [];
  conflicted = false;

  constructor(
    private readonly api: ReviewApi,
    readonly reviewer: string = 'assessor',
  ) {}

  async load(status?: string): Promise<QueueEntry[]> {
    this.queueEntries = await this.api.queue(status);
    this.index = 0;
    this.item = this.queueEntries.length ? await this.fetchCurrent() : null;
    return this.queueEntries;
  }

  get queue(): QueueEntry[] {
    return this.queueEntries;
  }

  get current(): ReviewItemView | null {
    return this.item;
  }

  get position(): { index: number; total: number } {
    return { index: this.index, total: this.queueEntries.length };
  }

  private async fetchCurrent(): Promise<ReviewItemView> {
    const entry = this.queueEntries[this.index];
    const view = await this.api.item(entry.instance_id);
    const seen = this.lastSeenHistory.get(view.instance_id);
    this.conflicted = seen !== undefined && view.history_length > seen;
    this.lastSeenHistory.set(view.instance_id, view.history_length);
    return view;
  }

  async next(): Promise<ReviewItemView | null> {
    if (this.index + 1 < this.queueEntries.length) {
      this.index += 1;
      this.item = await this.fetchCurrent();
    }
    return this.item;
  }

  async prev(): Promise<ReviewItemView | null> {
    if (this.index > 0) {
      this.index -= 1;
      this.item = await this.fetchCurrent();
    }
    return this.item;
  }

  async accept(): Promise<ReviewItemView | null> {
    return this.submit({ status: 'accepted', reviewer: this.reviewer });
  }

  async reject(): Promise<ReviewItemView | null> {
    return this.submit({ status: 'rejected', reviewer: this.reviewer });
  }

  async saveEdit(editedAnswer: string, major: boolean): Promise<ReviewItemView | null> {
    return this.submit({
      status: major ? 'major_edit' : 'minor_edit',
      reviewer: this.reviewer,
      edited_answer: editedAnswer,
    });
  }

  /** Submit a decision; on network failure retain it for retry. */
  async submit(decision: DecisionRequest): Promise<ReviewItemView | null> {
    if (!this.item) return null;
    const instanceId = this.item.instance_id;
    try {
      const view = await this.api.decide(instanceId, decision);
      this.applyAck(view);
      return view;
    } catch (err) {
      if (err instanceof ApiError && err.retryable) {
        this.pending.push({ instanceId, decision, attempts: 1 });
        return null;
      }
      throw err;
    }
  }

  private applyAck(view: ReviewItemView): void {
    this.item = view;
    this.lastSeenHistory.set(view.instance_id, view.history_length);
    const entry = this.queueEntries.find((e) => e.instance_id === view.instance_id);
    if (entry) entry.review_status = view.review_status;
  }

  /** Retry retained decisions; acknowledged ones leave the queue. */
  async flushPending(): Promise<number> {
    const still: PendingDecision[] = [];
    let delivered = 0;
    for (const entry of this.pending) {
      try {
        const view = await this.api.decide(entry.instanceId, entry.decision);
        delivered += 1;
        if (this.item && this.item.instance_id === view.instance_id) this.applyAck(view);
      } catch (err) {
        if (err instanceof ApiError && err.retryable) {
          still.push({ ...entry, attempts: entry.attempts + 1 });
        } else {
          throw err;
        }
      }
    }
    this.pending.splice(0, this.pending.length, ...still);
    return delivered;
  }

  stats(): Promise<ReviewStats> {
    return this.api.stats();
  }
}
