import { describe, expect, it } from 'vitest';

import { ReviewApi } from '../src/api.js';
import { ReviewFlow } from '../src/flow.js';
import type { ReviewItemView, ReviewStatus } from '../src/types.js';

/** In-memory fake of the review service with controllable connectivity. */
class FakeService {
  online = true;
  items = new Map<string, ReviewItemView>();

  constructor(n: number) {
    for (let i = 0; i < n; i++) {
      const id = `inst-${i}`;
      this.items.set(id, {
        instance_id: id,
        question_id: `q${i}`,
        question: `Does the user documentation contain item ${i}?`,
        doc_blocks: [
          { chunk_id: `g${i}`, text: `Golden evidence ${i}. Extra sentence.`, golden: true },
          { chunk_id: `x${i}`, text: `Distractor text ${i}.`, golden: false },
        ],
        ctx_blocks: [{ chunk_id: `c${i}`, text: `Clause ${i}.`, golden: true }],
        answer: `Reasoning.\n##begin_quote##Golden evidence ${i}.##end_quote##\nSummary.`,
        original_answer: 'original',
        validation: { quotes: [], all_verbatim: true, offending_quotes: [], format_ok: true },
        review_status: 'unreviewed',
        history_length: 0,
        m: 1,
        n: 1,
      });
    }
  }

  api(): ReviewApi {
    return new ReviewApi('http://fake', async (url, init) => {
      if (!this.online) throw new TypeError('offline');
      const path = url.replace('http://fake', '');
      if (path === '/review/queue') {
        const queue = [...this.items.values()].map((i) => ({
          instance_id: i.instance_id,
          question_id: i.question_id,
          review_status: i.review_status,
        }));
        return new Response(JSON.stringify(queue));
      }
      const decision = path.match(/^\/review\/item\/(.+)\/decision$/);
      if (decision && init?.method === 'POST') {
        const item = this.items.get(decision[1])!;
        const body = JSON.parse(String(init.body)) as {
          status: ReviewStatus;
          edited_answer?: string;
        };
        item.review_status = body.status;
        item.history_length += 1;
        if (body.edited_answer) item.answer = body.edited_answer;
        return new Response(JSON.stringify(item));
      }
      const single = path.match(/^\/review\/item\/(.+)$/);
      if (single) return new Response(JSON.stringify(this.items.get(single[1])!));
      if (path === '/review/stats') {
        const statuses = [...this.items.values()].map((i) => i.review_status);
        const count = (s: ReviewStatus) => statuses.filter((x) => x === s).length;
        const sampled = statuses.length;
        const modified = count('minor_edit') + count('major_edit');
        return new Response(
          JSON.stringify({
            sampled,
            reviewed: sampled - count('unreviewed'),
            counts: {
              unreviewed: count('unreviewed'),
              accepted: count('accepted'),
              minor_edit: count('minor_edit'),
              major_edit: count('major_edit'),
              rejected: count('rejected'),
            },
            modified_fraction: modified / sampled,
            major_fraction: count('major_edit') / sampled,
          }),
        );
      }
      return new Response('not found', { status: 404 });
    });
  }
}

describe('ReviewFlow', () => {
  it('pages through the queue', async () => {
    const service = new FakeService(3);
    const flow = new ReviewFlow(service.api());
    await flow.load();
    expect(flow.current?.instance_id).toBe('inst-0');
    await flow.next();
    expect(flow.current?.instance_id).toBe('inst-1');
    await flow.prev();
    expect(flow.current?.instance_id).toBe('inst-0');
  });

  it('accept flips the badge only after server ack', async () => {
    const service = new FakeService(2);
    const flow = new ReviewFlow(service.api());
    await flow.load();
    const view = await flow.accept();
    expect(view?.review_status).toBe('accepted');
    expect(flow.queue[0].review_status).toBe('accepted');
  });

  it('retains decisions across network failure and retries them', async () => {
    const service = new FakeService(2);
    const flow = new ReviewFlow(service.api());
    await flow.load();
    service.online = false;
    const ack = await flow.accept();
    expect(ack).toBeNull();
    expect(flow.pending).toHaveLength(1);
    expect(service.items.get('inst-0')!.review_status).toBe('unreviewed');

    service.online = true;
    const delivered = await flow.flushPending();
    expect(delivered).toBe(1);
    expect(flow.pending).toHaveLength(0);
    expect(service.items.get('inst-0')!.review_status).toBe('accepted');
  });

  it('stats report the modified fraction (3 edits of 10 -> 30%)', async () => {
    const service = new FakeService(10);
    const flow = new ReviewFlow(service.api());
    await flow.load();
    for (let i = 0; i < 7; i++) {
      await flow.accept();
      await flow.next();
    }
    await flow.saveEdit('edited ##begin_quote##Golden evidence 7.##end_quote## s', false);
    await flow.next();
    await flow.saveEdit('edited ##begin_quote##Golden evidence 8.##end_quote## s', false);
    await flow.next();
    await flow.saveEdit('edited ##begin_quote##Golden evidence 9.##end_quote## s', true);
    const stats = await flow.stats();
    expect(stats.modified_fraction).toBeCloseTo(0.3, 10);
    expect(stats.major_fraction).toBeCloseTo(0.1, 10);
  });

  it('detects superseded items as conflicts on revisit', async () => {
    const service = new FakeService(2);
    const flow = new ReviewFlow(service.api());
    await flow.load();
    // Another session decides the same item behind our back.
    service.items.get('inst-0')!.history_length += 1;
    await flow.next();
    await flow.prev();
    expect(flow.conflicted).toBe(true);
  });

  it('edits require the server round trip to change displayed state', async () => {
    const service = new FakeService(1);
    const flow = new ReviewFlow(service.api());
    await flow.load();
    const edited = 'Edited.\n##begin_quote##Golden evidence 0.##end_quote##\nSummary.';
    const view = await flow.saveEdit(edited, false);
    expect(view?.answer).toBe(edited);
    expect(view?.review_status).toBe('minor_edit');
  });
});
