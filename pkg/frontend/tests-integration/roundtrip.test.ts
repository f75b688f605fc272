/** Review round-trip against a live fixture service.
 *
 * Start the service first, then run this file:
 *
 *   python scripts/serve_fixture.py --workdir /tmp/fixture --port 8787 &
 *   cd frontend && REVIEW_API=http://127.0.0.1:8787 npm run test:integration
 *
 * Drives the same flow controller the browser UI uses: ten items get
 * 7 accepts, 2 minor edits and 1 major edit; the stats endpoint must then
 * report a modified fraction of 0.3, and the edited answers must appear
 * byte-identical in a fresh dataset export.
 */
import { execFileSync } from 'node:child_process';
import { readFileSync } from 'node:fs';
import { describe, expect, it } from 'vitest';

import { ReviewApi } from '../src/api.js';
import { ReviewFlow } from '../src/flow.js';

const BASE = process.env.REVIEW_API ?? '';
const WORKDIR = process.env.REVIEW_WORKDIR ?? '';

describe.skipIf(!BASE)('review round-trip against the fixture service', () => {
  it('submits decisions on ten items and verifies stats and export', async () => {
    const api = new ReviewApi(BASE);
    expect((await api.health()).status).toBe('ok');

    const flow = new ReviewFlow(api, 'integration-assessor');
    const queue = await flow.load('unreviewed');
    expect(queue.length).toBeGreaterThanOrEqual(10);

    const edits: { instanceId: string; answer: string }[] = [];
    for (let i = 0; i < 10; i++) {
      const item = flow.current!;
      if (i < 7) {
        const view = await flow.accept();
        expect(view?.review_status).toBe('accepted');
      } else {
        // Quote a golden block so the server-side revalidation passes.
        const golden = item.doc_blocks.find((b) => b.golden)!;
        const sentence = golden.text.split('. ')[0];
        const edited = `Reviewed and corrected.\n##begin_quote##${sentence}##end_quote##\nSummary: amended by the assessor.`;
        const major = i === 9;
        const view = await flow.saveEdit(edited, major);
        expect(view?.review_status).toBe(major ? 'major_edit' : 'minor_edit');
        expect(view?.validation?.all_verbatim).toBe(true);
        expect(view?.answer).toBe(edited);
        edits.push({ instanceId: item.instance_id, answer: edited });
      }
      if (i < 9) await flow.next();
    }

    const stats = await flow.stats();
    const modifiedOfTen = (stats.counts.minor_edit + stats.counts.major_edit) / 10;
    expect(modifiedOfTen).toBeCloseTo(0.3, 10);

    if (WORKDIR) {
      execFileSync('python3', [
        '-m', 'dualrag.cli',
        '--out-dir', `${WORKDIR}/out`,
        'export', '--force',
      ]);
      const sidecar = JSON.parse(readFileSync(`${WORKDIR}/out/dataset.meta.json`, 'utf-8'));
      const lines = readFileSync(`${WORKDIR}/out/dataset.jsonl`, 'utf-8').split('\n');
      for (const edit of edits) {
        const record = sidecar.records.find(
          (r: { instance_id: string }) => r.instance_id === edit.instanceId,
        );
        expect(record).toBeDefined();
        const payload = JSON.parse(lines[record.line]);
        expect(payload.messages[2].content).toBe(edit.answer);
      }
    }
  }, 30_000);
});
