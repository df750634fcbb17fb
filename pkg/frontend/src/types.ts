/** Wire types for the annotation service API. */

export const CATEGORIES = [
  "PP",
  "PNP/IV",
  "PNP/OOV",
  "NP/IV",
  "NP/OOV",
  "U",
] as const;

export type Category = (typeof CATEGORIES)[number];

export function isCategory(value: string): value is Category {
  return (CATEGORIES as readonly string[]).includes(value);
}

export interface ReferenceExample {
  clip_id: string;
  audio_url: string;
}

export interface Item {
  position: number;
  total: number;
  clip_id: string;
  audio_url: string;
  label_id: string;
  label_name: string;
  description: string;
  examples: ReferenceExample[];
  categories: string[];
}

export interface NextResponse {
  done: boolean;
  item?: Item;
}

export interface SessionInfo {
  session_id: string;
  annotator_id: string;
  total: number;
  cursor: number;
}

export interface JudgmentAck {
  session_id: string;
  cursor: number;
  done: boolean;
}

export interface NoiseEstimate {
  rate_pnp_incorrect: number;
  halfwidth_pnp_incorrect: number;
  rate_pnp_correct: number;
  halfwidth_pnp_correct: number;
  oov_share: number;
  confidence: number;
}

export interface EstimatePayload {
  table: Record<string, number>;
  estimate: NoiseEstimate;
}
