import { el } from "../dom";
import { score } from "../format";
import { QueueEntry } from "../types";

/**
 * The work queue: claims ascending by the verifier score of their current
 * citation, so the least-supported citations are reviewed first.
 */
export function renderQueue(
  entries: QueueEntry[],
  onOpen: (instanceId: string) => void,
): HTMLElement {
  const root = el("section", { class: "queue-page" }, el("h1", {}, "Review queue"));

  if (entries.length === 0) {
    root.append(
      el("p", { class: "empty-state", "data-testid": "empty-queue" }, "No claims to review."),
    );
    return root;
  }

  const list = el("ol", { class: "queue-list" });
  for (const entry of entries) {
    const badges = el("span", { class: "badges" });
    if (entry.flagged) {
      badges.append(el("span", { class: "badge badge-flagged" }, "flagged"));
    }
    if (entry.annotation_count > 0) {
      badges.append(
        el("span", { class: "badge badge-count" }, `${entry.annotation_count} annotated`),
      );
    }
    const item = el(
      "li",
      { class: entry.flagged ? "queue-item flagged" : "queue-item", "data-id": entry.instance_id },
      el("button", { class: "open-claim", type: "button" }, entry.claim_preview || entry.instance_id),
      el("span", { class: "queue-score" }, `score ${score(entry.original_score)}`),
      badges,
    );
    item.querySelector("button")!.addEventListener("click", () => onOpen(entry.instance_id));
    list.append(item);
  }
  root.append(list);
  return root;
}
