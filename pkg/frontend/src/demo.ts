/* Wiring for the bundled mailbox page.
 *
 * The page ships with the extension and is the only place the rewriter
 * runs.  One scan per click of the rewrite button; the reveal button
 * flips between rewritten and original text; reset restores the page
 * and unlocks the strategy picker.
 */

import { bindPack, PackBinding } from "./binding.js";
import { RewriteSession } from "./content.js";
import { StrategyName, STRATEGIES } from "./pack.js";

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`demo page is missing #${id}`);
  }
  return found as T;
}

function setStatus(text: string): void {
  el<HTMLSpanElement>("status").textContent = text;
}

async function loadBinding(): Promise<PackBinding> {
  const res = await fetch("./pack.json");
  if (!res.ok) {
    throw new Error(`pack.json fetch failed: ${res.status}`);
  }
  return bindPack(await res.text());
}

function boot(binding: PackBinding): void {
  const mailbox = el<HTMLElement>("mailbox");
  const targetSelect = el<HTMLSelectElement>("target");
  const scanButton = el<HTMLButtonElement>("scan");
  const revealButton = el<HTMLButtonElement>("reveal");
  const resetButton = el<HTMLButtonElement>("reset");

  for (const strategy of STRATEGIES) {
    const option = document.createElement("option");
    option.value = strategy;
    option.textContent = strategy;
    if (strategy === "negative") option.selected = true;
    targetSelect.appendChild(option);
  }

  const pack = binding.pack;
  el<HTMLSpanElement>("pack-info").textContent =
    `pack ${pack.version}: ${pack.markers.length} markers, ` +
    `${pack.templates.length} templates, band ${binding.rankBand}`;

  let session: RewriteSession | null = null;

  scanButton.addEventListener("click", () => {
    if (!session) {
      session = new RewriteSession(binding, targetSelect.value as StrategyName);
      targetSelect.disabled = true;
    }
    const altered = session.scan(mailbox);
    setStatus(`rewrote ${altered} node(s) to ${session.target}`);
    revealButton.disabled = session.chunks.length === 0;
  });

  revealButton.addEventListener("click", () => {
    if (!session) return;
    const revealed = session.toggle();
    revealButton.textContent = revealed ? "Show rewrite" : "Reveal originals";
    setStatus(revealed ? "showing original text" : "showing rewritten text");
  });

  resetButton.addEventListener("click", () => {
    if (session) {
      session.reset();
      session = null;
    }
    targetSelect.disabled = false;
    revealButton.disabled = true;
    revealButton.textContent = "Reveal originals";
    setStatus("idle");
  });

  revealButton.disabled = true;
  setStatus("idle");
}

loadBinding()
  .then(boot)
  .catch((exc: Error) => {
    setStatus(`pack load failed: ${exc.message}`);
  });
