// Payload shapes of the review API (see the pipeline service's HTTP docs).

export type Side = "A" | "B";
export type Preference = Side | "none";
export type EvidenceLevel = "enough" | "partial" | "no_evidence";

export interface QueueEntry {
  instance_id: string;
  claim_preview: string;
  original_score: number;
  flagged: boolean;
  annotation_count: number;
}

export interface CitationPane {
  label: Side;
  title: string;
  selected_passage: string;
  full_text: string;
}

export interface ClaimView {
  instance_id: string;
  article_title: string;
  section_path: string;
  claim: string;
  context: string;
  panes: CitationPane[];
}

export interface AnnotationBody {
  annotator_id: string;
  preference: Preference;
  evidence?: Partial<Record<Side, EvidenceLevel>>;
}

export interface SignTestStats {
  wins_suggested: number;
  wins_original: number;
  one_tail_p: number | null;
  two_tail_p: number | null;
}

export interface BucketRow {
  lo: number | null;
  hi: number | null;
  n_claims: number;
  n_annotations: number;
  preferences: Record<"original" | "suggested" | "none", number>;
}

export interface Stats {
  n_annotations: number;
  n_claims_annotated: number;
  preference_shares: Record<"original" | "suggested" | "none", number>;
  majority: Record<"original" | "suggested" | "none" | "no_majority", number>;
  fleiss_kappa: number | null;
  sign_test: SignTestStats;
  buckets: BucketRow[];
}
