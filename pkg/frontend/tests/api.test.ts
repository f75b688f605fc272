import { describe, expect, it } from 'vitest';

import { ApiError, ReviewApi } from '../src/api.js';

function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

describe('ReviewApi', () => {
  it('requests the expected paths and methods', async () => {
    const calls: { url: string; init?: RequestInit }[] = [];
    const api = new ReviewApi('http://svc', async (url, init) => {
      calls.push({ url, init });
      return jsonResponse({ ok: true });
    });
    await api.health();
    await api.queue();
    await api.queue('unreviewed');
    await api.item('inst-1');
    await api.stats();
    await api.decide('inst-1', { status: 'accepted', reviewer: 'r1' });

    expect(calls.map((c) => c.url)).toEqual([
      'http://svc/health',
      'http://svc/review/queue',
      'http://svc/review/queue?status=unreviewed',
      'http://svc/review/item/inst-1',
      'http://svc/review/stats',
      'http://svc/review/item/inst-1/decision',
    ]);
    const decision = calls[5];
    expect(decision.init?.method).toBe('POST');
    expect(JSON.parse(String(decision.init?.body))).toEqual({
      status: 'accepted',
      reviewer: 'r1',
    });
  });

  it('wraps network failures as retryable errors', async () => {
    const api = new ReviewApi('http://svc', async () => {
      throw new TypeError('fetch failed');
    });
    await expect(api.health()).rejects.toMatchObject({ retryable: true, status: null });
  });

  it('marks 4xx as non-retryable and 5xx as retryable', async () => {
    const api4 = new ReviewApi('http://svc', async () => jsonResponse({ detail: 'no' }, 404));
    await expect(api4.item('missing')).rejects.toMatchObject({ retryable: false, status: 404 });

    const api5 = new ReviewApi('http://svc', async () => jsonResponse({ detail: 'down' }, 503));
    await expect(api5.stats()).rejects.toBeInstanceOf(ApiError);
    await expect(api5.stats()).rejects.toMatchObject({ retryable: true });
  });
});
