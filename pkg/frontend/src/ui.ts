/** DOM rendering for the listening-test screens (browser only). */

import type { UiSessionState } from "./controller.js";
import { CATEGORIES } from "./types.js";

const CATEGORY_TITLES: Record<string, string> = {
  "PP": "Present and predominant",
  "PNP/IV": "Present, not predominant; other sounds in-vocabulary",
  "PNP/OOV": "Present, not predominant; an out-of-vocabulary sound present",
  "NP/IV": "Not present; other sounds in-vocabulary",
  "NP/OOV": "Not present; an out-of-vocabulary sound present",
  "U": "Unsure",
};

const MAX_EXAMPLE_PLAYERS = 3;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function audioPlayer(url: string): HTMLAudioElement {
  const audio = el("audio");
  audio.controls = true;
  audio.preload = "none";
  audio.src = url;
  return audio;
}

function percent(value: number): string {
  return `${(100 * value).toFixed(1)}%`;
}

export function render(
  root: HTMLElement,
  state: UiSessionState,
  onJudge: (category: string) => void,
  onRetry: () => void,
): void {
  root.replaceChildren();

  const header = el("header");
  header.append(el("h1", undefined, "Listening test"));
  const progress = el("div", "progress");
  progress.textContent = `${Math.min(state.position, state.total)} / ${state.total}`;
  header.append(progress);
  root.append(header);

  if (state.banner !== null) {
    const banner = el("div", "banner", state.banner);
    const retry = el("button", "retry", "Retry");
    retry.addEventListener("click", onRetry);
    banner.append(retry);
    root.append(banner);
  }

  if (state.done) {
    root.append(renderSummary(state));
    return;
  }

  const item = state.currentItem;
  if (item === null) {
    root.append(el("p", "loading", "Loading..."));
    return;
  }

  const card = el("section", "item");
  card.append(el("h2", undefined, item.label_name));
  if (item.description) {
    card.append(el("p", "description", item.description));
  }
  const clip = el("div", "clip");
  clip.append(el("h3", undefined, `Clip ${item.clip_id}`));
  clip.append(audioPlayer(item.audio_url));
  card.append(clip);

  if (item.examples.length > 0) {
    const refs = el("div", "examples");
    refs.append(el("h3", undefined, "Reference examples"));
    for (const example of item.examples.slice(0, MAX_EXAMPLE_PLAYERS)) {
      const row = el("div", "example");
      row.append(el("span", undefined, example.clip_id));
      row.append(audioPlayer(example.audio_url));
      refs.append(row);
    }
    card.append(refs);
  }

  const buttons = el("div", "judgments");
  CATEGORIES.forEach((category, index) => {
    const button = el("button", "judgment", `${index + 1}. ${category}`);
    button.title = CATEGORY_TITLES[category] ?? category;
    button.disabled = state.pending;
    button.addEventListener("click", () => onJudge(category));
    buttons.append(button);
  });
  card.append(buttons);
  root.append(card);
}

function renderSummary(state: UiSessionState): HTMLElement {
  const summary = el("section", "summary");
  summary.append(el("h2", undefined, "Session complete"));
  const estimate = state.estimate;
  if (estimate === null) {
    summary.append(el("p", undefined, "Estimate unavailable."));
    return summary;
  }
  const table = el("table", "tally");
  const head = el("tr");
  head.append(el("th", undefined, "Category"), el("th", undefined, "Share"));
  table.append(head);
  for (const category of CATEGORIES) {
    const row = el("tr");
    const share = estimate.table[category] ?? 0;
    row.append(el("td", undefined, category), el("td", undefined, percent(share)));
    table.append(row);
  }
  summary.append(table);

  const rates = el("dl", "rates");
  const entries: Array<[string, string]> = [
    [
      "Noise rate (PNP incorrect)",
      `${percent(estimate.estimate.rate_pnp_incorrect)} ± ${percent(
        estimate.estimate.halfwidth_pnp_incorrect,
      )}`,
    ],
    [
      "Noise rate (PNP correct)",
      `${percent(estimate.estimate.rate_pnp_correct)} ± ${percent(
        estimate.estimate.halfwidth_pnp_correct,
      )}`,
    ],
    ["OOV share of incorrect clips", percent(estimate.estimate.oov_share)],
  ];
  for (const [term, value] of entries) {
    rates.append(el("dt", undefined, term), el("dd", undefined, value));
  }
  summary.append(rates);
  return summary;
}
