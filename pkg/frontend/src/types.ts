/** JSON shapes of the review service endpoints. */

export type ReviewStatus =
  | 'unreviewed'
  | 'accepted'
  | 'minor_edit'
  | 'major_edit'
  | 'rejected';

export interface QueueEntry {
  instance_id: string;
  question_id: string;
  review_status: ReviewStatus;
}

export interface BlockView {
  chunk_id: string;
  text: string;
  golden: boolean;
}

export interface ValidationView {
  quotes: string[];
  all_verbatim: boolean;
  offending_quotes: string[];
  format_ok: boolean;
}

export interface ReviewItemView {
  instance_id: string;
  question_id: string;
  question: string;
  doc_blocks: BlockView[];
  ctx_blocks: BlockView[];
  answer: string;
  original_answer: string;
  validation: ValidationView | null;
  review_status: ReviewStatus;
  history_length: number;
  m: number;
  n: number;
}

export interface ReviewStats {
  sampled: number;
  reviewed: number;
  counts: Record<ReviewStatus, number>;
  modified_fraction: number;
  major_fraction: number;
}

export interface DecisionRequest {
  status: ReviewStatus;
  reviewer: string;
  edited_answer?: string;
}
