export const DASH = "—";

/** 0.347 -> "34.7%"; null/undefined -> an em dash. */
export function percent(value: number | null | undefined): string {
  if (value === null || value === undefined || Number.isNaN(value)) return DASH;
  return `${(value * 100).toFixed(1)}%`;
}

/** p-values render to 4 decimals; missing values to an em dash. */
export function pValue(value: number | null | undefined): string {
  if (value === null || value === undefined || Number.isNaN(value)) return DASH;
  return value.toFixed(4);
}

export function score(value: number): string {
  return value.toFixed(2);
}

/** Human label for a half-open score bucket. */
export function bucketLabel(lo: number | null, hi: number | null): string {
  if (lo === null && hi === null) return "all scores";
  if (lo === null) return `< ${hi}`;
  if (hi === null) return `≥ ${lo}`;
  return `[${lo}, ${hi})`;
}
