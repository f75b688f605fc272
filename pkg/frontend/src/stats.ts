/** Presentation helpers for the stats view. */

import type { ReviewStats } from './types.js';

export function formatPercent(fraction: number): string {
  return `${Math.round(fraction * 100)}%`;
}

export interface StatsLine {
  label: string;
  value: string;
}

export function statsLines(stats: ReviewStats): StatsLine[] {
  return [
    { label: 'Sampled', value: String(stats.sampled) },
    { label: 'Reviewed', value: `${stats.reviewed} / ${stats.sampled}` },
    { label: 'Accepted', value: String(stats.counts.accepted ?? 0) },
    { label: 'Minor edits', value: String(stats.counts.minor_edit ?? 0) },
    { label: 'Major edits', value: String(stats.counts.major_edit ?? 0) },
    { label: 'Rejected', value: String(stats.counts.rejected ?? 0) },
    { label: 'Modified', value: formatPercent(stats.modified_fraction) },
    { label: 'Major', value: formatPercent(stats.major_fraction) },
  ];
}
