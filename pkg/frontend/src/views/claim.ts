import { el, clear } from "../dom";
import { ApiError, ReviewApi } from "../api";
import { ClaimView, EvidenceLevel, Preference, Side } from "../types";

const EVIDENCE_CHOICES: { value: EvidenceLevel; label: string }[] = [
  { value: "enough", label: "enough to verify the claim" },
  { value: "partial", label: "partially verified" },
  { value: "no_evidence", label: "no evidence" },
];

export interface ClaimHandlers {
  annotatorId: string;
  api: ReviewApi;
  /** Called after a successful submission, to advance to the next claim. */
  onSubmitted: (instanceId: string) => void;
}

/**
 * Blind side-by-side view: the claim with its sentence highlighted, two
 * citation panes labeled only A and B, a preference choice (A, B, or none of
 * the two), and optional per-pane evidence levels.  Submit stays disabled
 * until a preference is chosen; submission is optimistic and rolls back on
 * any 4xx.
 */
export function renderClaim(view: ClaimView, handlers: ClaimHandlers): HTMLElement {
  const root = el("section", { class: "claim-page" });
  root.append(
    el(
      "header",
      {},
      el("h1", {}, view.article_title),
      el("p", { class: "section-path" }, view.section_path),
    ),
  );

  const claimBlock = el("blockquote", { class: "claim-context" });
  if (view.context) {
    claimBlock.append(document.createTextNode(view.context + " "));
  }
  claimBlock.append(el("mark", { class: "claim-sentence" }, view.claim));
  root.append(claimBlock);

  const evidence: Partial<Record<Side, EvidenceLevel>> = {};
  const panes = el("div", { class: "panes" });
  for (const pane of view.panes) {
    const select = el("select", { class: "evidence-select", "data-side": pane.label });
    select.append(el("option", { value: "" }, "evidence level (optional)"));
    for (const choice of EVIDENCE_CHOICES) {
      select.append(el("option", { value: choice.value }, choice.label));
    }
    select.addEventListener("change", () => {
      const value = (select as HTMLSelectElement).value;
      if (value) {
        evidence[pane.label] = value as EvidenceLevel;
      } else {
        delete evidence[pane.label];
      }
    });
    panes.append(
      el(
        "article",
        { class: "pane", "data-pane": pane.label },
        el("h2", {}, `Citation ${pane.label}`),
        el("h3", { class: "pane-title" }, pane.title),
        el("p", { class: "selected-passage" }, pane.selected_passage),
        el(
          "details",
          { class: "full-text" },
          el("summary", {}, "Full text"),
          el("p", {}, pane.full_text),
        ),
        select,
      ),
    );
  }
  root.append(panes);

  let preference: Preference | null = null;
  const form = el("form", { class: "annotation-form" });
  const choices = el("fieldset", { class: "preference-choices" });
  choices.append(el("legend", {}, "Which citation better supports the claim?"));
  const options: { value: Preference; label: string }[] = [
    { value: "A", label: "Citation A" },
    { value: "B", label: "Citation B" },
    { value: "none", label: "none of the two" },
  ];
  const submit = el("button", { class: "submit", type: "submit", disabled: true }, "Submit");
  for (const option of options) {
    const input = el("input", {
      type: "radio",
      name: "preference",
      value: option.value,
      id: `pref-${option.value}`,
    }) as HTMLInputElement;
    input.addEventListener("change", () => {
      preference = option.value;
      submit.removeAttribute("disabled");
    });
    choices.append(el("label", { for: `pref-${option.value}` }, input, ` ${option.label}`));
  }
  const status = el("p", { class: "submit-status", role: "status" });
  form.append(choices, submit, status);

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (!preference) return;
    const chosen = preference;

    // Optimistic: lock the form and report success immediately; roll back if
    // the server rejects the annotation.
    const inputs = form.querySelectorAll("input, button, select");
    inputs.forEach((node) => node.setAttribute("disabled", ""));
    clear(status);
    status.append("Recorded.");

    handlers.api
      .postAnnotation(view.instance_id, {
        annotator_id: handlers.annotatorId,
        preference: chosen,
        evidence: Object.keys(evidence).length ? evidence : undefined,
      })
      .then(() => handlers.onSubmitted(view.instance_id))
      .catch((error: unknown) => {
        inputs.forEach((node) => node.removeAttribute("disabled"));
        submit.removeAttribute("disabled");
        clear(status);
        const message =
          error instanceof ApiError && error.status === 409
            ? "You already annotated this claim; nothing was changed."
            : error instanceof ApiError
              ? `Submission rejected (${error.status}): ${error.detail}`
              : "Submission failed; please retry.";
        status.append(el("span", { class: "error" }, message));
      });
  });

  root.append(form);
  return root;
}
