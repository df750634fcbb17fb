/** Bootstrap: session form, keyboard shortcuts, render loop. */

import { ApiClient } from "./api.js";
import { SessionController, categoryForKey } from "./controller.js";
import { render } from "./ui.js";

const root = document.getElementById("app");
if (root === null) throw new Error("missing #app mount point");

const api = new ApiClient((path, init) => fetch(path, init));

function showStartForm(): void {
  root!.replaceChildren();
  const form = document.createElement("form");
  form.className = "start";
  form.innerHTML = `
    <h1>Listening test</h1>
    <label>Annotator <input name="annotator" required placeholder="your name"></label>
    <label>Sample size <input name="sample" type="number" value="100" min="1"></label>
    <label>Seed <input name="seed" type="number" value="0"></label>
    <button type="submit">Start session</button>
  `;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    void startSession(
      String(data.get("annotator") ?? "anonymous"),
      Number(data.get("sample") ?? 100),
      Number(data.get("seed") ?? 0),
    );
  });
  root!.append(form);
}

async function startSession(annotator: string, sampleSize: number, seed: number): Promise<void> {
  const controller = await SessionController.start(api, annotator, sampleSize, seed);
  const redraw = () =>
    render(
      root!,
      controller.state,
      (category) => void controller.submit(category),
      () => void controller.retry(),
    );
  controller.onChange(redraw);
  document.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLInputElement) return;
    const category = categoryForKey(event.key);
    if (category !== null) void controller.submit(category);
  });
  redraw();
}

showStartForm();
