import { ApiClient } from "./api";
import { clear, el } from "./dom";
import { renderClaim } from "./views/claim";
import { renderQueue } from "./views/queue";
import { renderStats } from "./views/stats";

const ANNOTATOR_KEY = "citecheck.annotator_id";

export interface AppOptions {
  root: HTMLElement;
  apiBaseUrl: string;
  /** Injectable for tests; defaults to window.localStorage. */
  storage?: Storage;
}

/** Routes: #/queue (default), #/claims/<id>, #/stats. */
export class ReviewApp {
  private readonly api: ApiClient;
  private readonly root: HTMLElement;
  private readonly storage: Storage;
  private queueOrder: string[] = [];

  constructor(options: AppOptions) {
    this.api = new ApiClient(options.apiBaseUrl);
    this.root = options.root;
    this.storage = options.storage ?? window.localStorage;
  }

  annotatorId(): string {
    let id = this.storage.getItem(ANNOTATOR_KEY);
    if (!id) {
      id = `annotator-${Math.random().toString(36).slice(2, 10)}`;
      this.storage.setItem(ANNOTATOR_KEY, id);
    }
    return id;
  }

  async start(): Promise<void> {
    window.addEventListener("hashchange", () => void this.route());
    await this.route();
  }

  async route(): Promise<void> {
    const hash = window.location.hash || "#/queue";
    const claimMatch = hash.match(/^#\/claims\/(.+)$/);
    try {
      if (claimMatch) {
        await this.showClaim(decodeURIComponent(claimMatch[1]));
      } else if (hash === "#/stats") {
        await this.showStats();
      } else {
        await this.showQueue();
      }
    } catch (error) {
      this.show(
        el("p", { class: "error", role: "alert" }, `Could not load this view: ${String(error)}`),
      );
    }
  }

  private show(view: HTMLElement): void {
    clear(this.root);
    this.root.append(this.navigation(), view);
  }

  private navigation(): HTMLElement {
    return el(
      "nav",
      {},
      el("a", { href: "#/queue" }, "Queue"),
      " | ",
      el("a", { href: "#/stats" }, "Statistics"),
    );
  }

  async showQueue(): Promise<void> {
    const entries = await this.api.getQueue();
    this.queueOrder = entries.map((entry) => entry.instance_id);
    this.show(
      renderQueue(entries, (id) => {
        window.location.hash = `#/claims/${encodeURIComponent(id)}`;
      }),
    );
  }

  async showClaim(instanceId: string): Promise<void> {
    const view = await this.api.getClaim(instanceId);
    this.show(
      renderClaim(view, {
        annotatorId: this.annotatorId(),
        api: this.api,
        onSubmitted: (id) => this.advanceFrom(id),
      }),
    );
  }

  async showStats(): Promise<void> {
    const stats = await this.api.getStats();
    this.show(renderStats(stats));
  }

  /** After a submission, open the next claim in queue order, else the queue. */
  private advanceFrom(instanceId: string): void {
    const index = this.queueOrder.indexOf(instanceId);
    const next = index >= 0 ? this.queueOrder[index + 1] : undefined;
    window.location.hash = next ? `#/claims/${encodeURIComponent(next)}` : "#/queue";
  }
}

export function bootstrap(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const apiBaseUrl =
    document.documentElement.dataset.apiBase ?? window.location.origin;
  void new ReviewApp({ root, apiBaseUrl }).start();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  bootstrap();
}
