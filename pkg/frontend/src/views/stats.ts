import { el } from "../dom";
import { DASH, bucketLabel, pValue, percent } from "../format";
import { Stats } from "../types";

const PREFS = ["original", "suggested", "none"] as const;

/**
 * Aggregate dashboard: preference shares, majority outcomes, per-bucket
 * preference bars over the citation score, agreement, and the sign test.
 * Everything degrades to dashes at zero annotations.
 */
export function renderStats(stats: Stats): HTMLElement {
  const root = el("section", { class: "stats-page" }, el("h1", {}, "Annotation statistics"));
  const empty = stats.n_annotations === 0;

  root.append(
    el(
      "p",
      { class: "totals" },
      `${stats.n_annotations} annotations over ${stats.n_claims_annotated} claims`,
    ),
  );

  const shares = el("dl", { class: "shares" });
  for (const pref of PREFS) {
    shares.append(
      el("dt", {}, label(pref)),
      el(
        "dd",
        { "data-share": pref },
        empty ? DASH : percent(stats.preference_shares[pref]),
      ),
    );
  }
  root.append(el("h2", {}, "Preference shares"), shares);

  const majority = el("dl", { class: "majority" });
  for (const key of [...PREFS, "no_majority"] as const) {
    majority.append(
      el("dt", {}, label(key)),
      el("dd", { "data-majority": key }, String(stats.majority[key])),
    );
  }
  root.append(el("h2", {}, "Majority outcomes per claim"), majority);

  const buckets = el("table", { class: "buckets" });
  buckets.append(
    el(
      "tr",
      {},
      el("th", {}, "citation score"),
      el("th", {}, "claims"),
      el("th", {}, "preferences"),
    ),
  );
  for (const bucket of stats.buckets) {
    const bars = el("div", { class: "bucket-bars" });
    if (bucket.n_annotations > 0) {
      for (const pref of PREFS) {
        const width = (100 * bucket.preferences[pref]) / bucket.n_annotations;
        bars.append(
          el(
            "span",
            {
              class: `bar bar-${pref}`,
              style: `width: ${width.toFixed(1)}%`,
              title: `${label(pref)}: ${bucket.preferences[pref]}`,
            },
          ),
        );
      }
    } else {
      bars.append(DASH);
    }
    buckets.append(
      el(
        "tr",
        { "data-bucket": bucketLabel(bucket.lo, bucket.hi) },
        el("td", {}, bucketLabel(bucket.lo, bucket.hi)),
        el("td", {}, String(bucket.n_claims)),
        el("td", {}, bars),
      ),
    );
  }
  root.append(el("h2", {}, "Preferences by citation score"), buckets);

  const agreement = el("dl", { class: "agreement" });
  agreement.append(
    el("dt", {}, "Fleiss' kappa"),
    el(
      "dd",
      { "data-stat": "kappa" },
      stats.fleiss_kappa === null ? DASH : stats.fleiss_kappa.toFixed(3),
    ),
    el("dt", {}, "sign test, one-tail p"),
    el("dd", { "data-stat": "one-tail" }, pValue(stats.sign_test.one_tail_p)),
    el("dt", {}, "sign test, two-tail p"),
    el("dd", { "data-stat": "two-tail" }, pValue(stats.sign_test.two_tail_p)),
  );
  root.append(el("h2", {}, "Agreement"), agreement);
  return root;
}

function label(pref: string): string {
  switch (pref) {
    case "original":
      return "current citation";
    case "suggested":
      return "recommended citation";
    case "none":
      return "none of the two";
    default:
      return "no majority";
  }
}
