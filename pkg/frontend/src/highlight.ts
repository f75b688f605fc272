/** Quote-marker parsing and highlight-range computation.
 *
 * Answers cite evidence between ##begin_quote## and ##end_quote##; the
 * server validates verbatimness, the client computes where each quoted
 * span sits inside the displayed block texts so it can be highlighted.
 * Matching tolerates whitespace differences exactly like the server
 * (runs collapse, edges trim), but ranges are reported against the raw
 * block text so they can be marked up in place.
 */

export const QUOTE_BEGIN = '##begin_quote##';
export const QUOTE_END = '##end_quote##';

export interface AnswerSegment {
  text: string;
  isQuote: boolean;
}

/** Split an answer into prose and quote segments, markers removed. */
export function parseAnswerSegments(answer: string): AnswerSegment[] {
  const segments: AnswerSegment[] = [];
  let rest = answer;
  for (;;) {
    const begin = rest.indexOf(QUOTE_BEGIN);
    if (begin < 0) break;
    const end = rest.indexOf(QUOTE_END, begin + QUOTE_BEGIN.length);
    if (end < 0) break;
    if (begin > 0) segments.push({ text: rest.slice(0, begin), isQuote: false });
    segments.push({ text: rest.slice(begin + QUOTE_BEGIN.length, end), isQuote: true });
    rest = rest.slice(end + QUOTE_END.length);
  }
  if (rest.length > 0) segments.push({ text: rest, isQuote: false });
  return segments;
}

export function extractQuotes(answer: string): string[] {
  return parseAnswerSegments(answer)
    .filter((s) => s.isQuote)
    .map((s) => s.text);
}

export interface HighlightRange {
  blockIndex: number;
  start: number;
  end: number;
  quote: string;
}

function escapeRegExp(text: string): string {
  return text.replace(/[.*+?^${}()|[\]\\]/g, '\\$&');
}

/** Locate a span in a raw text, tolerating whitespace differences. */
export function findSpan(span: string, text: string): { start: number; end: number } | null {
  const tokens = span.split(/\s+/).filter((t) => t.length > 0);
  if (tokens.length === 0) return null;
  const pattern = tokens.map(escapeRegExp).join('\\s+');
  const match = new RegExp(pattern).exec(text);
  if (!match) return null;
  return { start: match.index, end: match.index + match[0].length };
}

/**
 * Attribute each quote of an answer to the first block containing it,
 * returning in-bounds ranges for highlighting. Quotes matching no block
 * are reported with blockIndex -1 (the hallucination signal the reviewer
 * must see).
 */
export function computeHighlights(answer: string, blockTexts: string[]): HighlightRange[] {
  const ranges: HighlightRange[] = [];
  for (const quote of extractQuotes(answer)) {
    let placed = false;
    for (let i = 0; i < blockTexts.length; i++) {
      const found = findSpan(quote, blockTexts[i]);
      if (found) {
        ranges.push({ blockIndex: i, start: found.start, end: found.end, quote });
        placed = true;
        break;
      }
    }
    if (!placed) ranges.push({ blockIndex: -1, start: 0, end: 0, quote });
  }
  return ranges;
}

/** Render a block's text into [before, marked, after, marked, ...] pieces. */
export function segmentBlock(
  text: string,
  ranges: { start: number; end: number }[],
): AnswerSegment[] {
  const sorted = [...ranges].sort((a, b) => a.start - b.start);
  const segments: AnswerSegment[] = [];
  let cursor = 0;
  for (const range of sorted) {
    if (range.start < cursor) continue; // overlapping ranges collapse
    if (range.start > cursor) segments.push({ text: text.slice(cursor, range.start), isQuote: false });
    segments.push({ text: text.slice(range.start, range.end), isQuote: true });
    cursor = range.end;
  }
  if (cursor < text.length) segments.push({ text: text.slice(cursor), isQuote: false });
  return segments;
}
