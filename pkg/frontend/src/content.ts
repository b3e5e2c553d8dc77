/* Scanning the demo mailbox and rewriting request text in place.
 *
 * A scan walks the text nodes under a root, rewrites every node whose
 * text carries an extractable head act, and remembers the original in
 * memory so a reveal toggle can flip the display back.  Only character
 * data changes; no element or attribute is ever touched.  Nodes
 * without a request core are left alone.
 */

import { rewriteBody } from "./engine.js";
import { PackBinding } from "./binding.js";
import { StrategyName } from "./pack.js";

// Subtrees marked with this attribute belong to the demo chrome and
// are never scanned.
export const SKIP_ATTRIBUTE = "data-rewriter-skip";

const SKIP_TAGS = new Set(["SCRIPT", "STYLE", "NOSCRIPT"]);

const TEXT_NODE = 3;
const ELEMENT_NODE = 1;

function skippedElement(el: Element): boolean {
  if (SKIP_TAGS.has(el.tagName)) return true;
  if (el.getAttribute("aria-hidden") === "true") return true;
  return el.hasAttribute("hidden") || el.hasAttribute(SKIP_ATTRIBUTE);
}

export function collectTextNodes(root: Element): Text[] {
  const result: Text[] = [];
  const stack: Node[] = [root];

  // Depth-first walk that prunes skipped subtrees whole, so nothing
  // under hidden or marked elements is ever visited.
  while (stack.length > 0) {
    const node = stack.pop() as Node;
    if (node.nodeType === TEXT_NODE) {
      if (node.nodeValue && node.nodeValue.trim()) {
        result.push(node as Text);
      }
      continue;
    }
    if (node.nodeType !== ELEMENT_NODE) continue;
    if (skippedElement(node as Element)) continue;
    const children = node.childNodes;
    for (let i = children.length - 1; i >= 0; i -= 1) {
      stack.push(children[i] as Node);
    }
  }

  return result;
}

export interface NodeChunk {
  node: Text;
  original: string;
  rewritten: string;
  source: StrategyName;
}

export class RewriteSession {
  readonly target: StrategyName;
  readonly chunks: NodeChunk[] = [];
  revealed = false;

  private binding: PackBinding;
  private slots: Record<string, string> | undefined;
  private seen = new Set<Text>();

  constructor(
    binding: PackBinding,
    target: StrategyName,
    slots?: Record<string, string>,
  ) {
    this.binding = binding;
    this.target = target;
    this.slots = slots;
  }

  /* Rewrite every untouched text node under root that holds a request
   * core; returns how many nodes were altered.  A node is processed at
   * most once per session, so a second scan over the same tree is a
   * no-op and returns 0.
   */
  scan(root: Element): number {
    let altered = 0;
    for (const node of collectTextNodes(root)) {
      if (this.seen.has(node)) continue;
      this.seen.add(node);
      const body = node.nodeValue ?? "";
      const result = rewriteBody(body, this.target, this.binding.pack, this.slots);
      if (result === null || result.body === body) continue;
      node.nodeValue = result.body;
      this.chunks.push({
        node,
        original: body,
        rewritten: result.body,
        source: result.source,
      });
      altered += 1;
    }
    return altered;
  }

  // Show the text the nodes carried before the scan.
  reveal(): void {
    for (const chunk of this.chunks) {
      chunk.node.nodeValue = chunk.original;
    }
    this.revealed = true;
  }

  // Show the rewritten text again.
  conceal(): void {
    for (const chunk of this.chunks) {
      chunk.node.nodeValue = chunk.rewritten;
    }
    this.revealed = false;
  }

  toggle(): boolean {
    if (this.revealed) {
      this.conceal();
    } else {
      this.reveal();
    }
    return this.revealed;
  }

  // Put the originals back and forget everything this session did.
  reset(): void {
    this.reveal();
    this.chunks.length = 0;
    this.seen.clear();
    this.revealed = false;
  }
}
