/** DOM layer: renders the review flow and wires the keyboard-first controls.
 *
 * Keys: j / k next / previous, a accept, x reject, e edit the answer,
 * Enter (in editor, with Ctrl) save as minor edit, Ctrl+Shift+Enter major.
 * The UI never mutates golden/distractor membership; it displays blocks,
 * highlights quoted evidence, and edits answer text only.
 */

import { ReviewApi } from './api.js';
import { ReviewFlow } from './flow.js';
import { computeHighlights, parseAnswerSegments, segmentBlock } from './highlight.js';
import { formatPercent, statsLines } from './stats.js';
import type { BlockView, ReviewItemView } from './types.js';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class ReviewApp {
  private readonly flow: ReviewFlow;
  private root: HTMLElement;
  private editing = false;

  constructor(baseUrl: string, root: HTMLElement, reviewer = 'assessor') {
    this.flow = new ReviewFlow(new ReviewApi(baseUrl), reviewer);
    this.root = root;
  }

  async start(): Promise<void> {
    await this.flow.load();
    document.addEventListener('keydown', (event) => this.onKey(event));
    window.addEventListener('online', () => void this.flushPending());
    await this.render();
  }

  private async flushPending(): Promise<void> {
    const delivered = await this.flow.flushPending();
    if (delivered > 0) await this.render();
  }

  private onKey(event: KeyboardEvent): void {
    if (this.editing) return;
    const actions: Record<string, () => Promise<unknown>> = {
      j: () => this.flow.next(),
      k: () => this.flow.prev(),
      a: () => this.flow.accept(),
      x: () => this.flow.reject(),
      e: async () => this.openEditor(),
    };
    const action = actions[event.key];
    if (action) {
      event.preventDefault();
      void action().then(() => this.render());
    }
  }

  private openEditor(): void {
    this.editing = true;
    void this.render();
  }

  private async saveEdit(text: string, major: boolean): Promise<void> {
    this.editing = false;
    await this.flow.saveEdit(text, major);
    await this.render();
  }

  private renderBlocks(container: HTMLElement, blocks: BlockView[], item: ReviewItemView, kind: 'doc' | 'ctx'): void {
    const highlights =
      kind === 'doc' ? computeHighlights(item.answer, blocks.map((b) => b.text)) : [];
    blocks.forEach((block, i) => {
      const panel = el('div', `block ${block.golden ? 'golden' : 'distractor'}`);
      const title = el(
        'div',
        'block-title',
        `${kind === 'doc' ? 'Document' : 'Context'} ${i + 1} · ${block.golden ? 'golden' : 'distractor'} · ${block.chunk_id}`,
      );
      panel.appendChild(title);
      const body = el('div', 'block-body');
      const ranges = highlights.filter((h) => h.blockIndex === i);
      for (const segment of segmentBlock(block.text, ranges)) {
        if (segment.isQuote) {
          body.appendChild(el('mark', 'quote-hit', segment.text));
        } else {
          body.appendChild(document.createTextNode(segment.text));
        }
      }
      panel.appendChild(body);
      container.appendChild(panel);
    });
  }

  private renderAnswer(container: HTMLElement, item: ReviewItemView): void {
    if (this.editing) {
      const editor = el('textarea', 'answer-editor');
      editor.value = item.answer;
      editor.addEventListener('keydown', (event) => {
        if (event.key === 'Enter' && event.ctrlKey) {
          event.preventDefault();
          void this.saveEdit(editor.value, event.shiftKey);
        }
        if (event.key === 'Escape') {
          this.editing = false;
          void this.render();
        }
      });
      container.appendChild(editor);
      const hint = el('div', 'hint', 'Ctrl+Enter save as minor edit · Ctrl+Shift+Enter major edit · Esc cancel');
      container.appendChild(hint);
      editor.focus();
      return;
    }
    const answer = el('div', 'answer-body');
    for (const segment of parseAnswerSegments(item.answer)) {
      if (segment.isQuote) answer.appendChild(el('mark', 'quote', segment.text));
      else answer.appendChild(document.createTextNode(segment.text));
    }
    container.appendChild(answer);
  }

  async render(): Promise<void> {
    const item = this.flow.current;
    this.root.replaceChildren();

    const header = el('header');
    const { index, total } = this.flow.position;
    header.appendChild(el('span', 'position', total ? `item ${index + 1} of ${total}` : 'queue empty'));
    const stats = await this.flow.stats();
    header.appendChild(
      el('span', 'stats', `reviewed ${stats.reviewed}/${stats.sampled} · modified ${formatPercent(stats.modified_fraction)}`),
    );
    if (this.flow.pending.length) {
      header.appendChild(el('span', 'pending', `${this.flow.pending.length} decisions pending retry`));
    }
    if (this.flow.conflicted) {
      header.appendChild(el('span', 'conflict', 'item changed on server — reload (k then j) before deciding'));
    }
    this.root.appendChild(header);

    if (!item) {
      this.root.appendChild(el('p', 'empty', 'No review items.'));
      return;
    }

    const main = el('main');
    const question = el('section', 'question');
    question.appendChild(el('h2', undefined, item.question));
    const badges = el('div', 'badges');
    badges.appendChild(el('span', `badge status-${item.review_status}`, item.review_status));
    if (item.validation) {
      badges.appendChild(
        el('span', `badge ${item.validation.all_verbatim ? 'ok' : 'bad'}`, `verbatim: ${item.validation.all_verbatim}`),
      );
      badges.appendChild(
        el('span', `badge ${item.validation.format_ok ? 'ok' : 'bad'}`, `format: ${item.validation.format_ok}`),
      );
    }
    question.appendChild(badges);
    main.appendChild(question);

    const docs = el('section', 'docs');
    docs.appendChild(el('h3', undefined, `User documentation (${item.m} golden of ${item.doc_blocks.length})`));
    this.renderBlocks(docs, item.doc_blocks, item, 'doc');
    main.appendChild(docs);

    const ctx = el('section', 'ctx');
    ctx.appendChild(el('h3', undefined, `Contextual information (${item.n} golden of ${item.ctx_blocks.length})`));
    this.renderBlocks(ctx, item.ctx_blocks, item, 'ctx');
    main.appendChild(ctx);

    const answer = el('section', 'answer');
    answer.appendChild(el('h3', undefined, 'Generated answer'));
    this.renderAnswer(answer, item);
    main.appendChild(answer);

    const footer = el('footer');
    const lines = statsLines(stats)
      .map((line) => `${line.label}: ${line.value}`)
      .join('  ·  ');
    footer.appendChild(el('div', 'stats-lines', lines));
    footer.appendChild(el('div', 'hint', 'keys: j next · k prev · a accept · x reject · e edit'));
    main.appendChild(footer);

    this.root.appendChild(main);
  }
}
