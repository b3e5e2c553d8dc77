/* Rule evaluation over pack data: marker matching, strategy
 * classification, head-act extraction, and the strategy rewrite.
 *
 * Everything here is driven by the loaded pack alone and must produce
 * the same text the lab CLI prints for the same body.  Offsets are
 * UTF-16 indices internally; head-act spans convert to UTF-8 bytes at
 * the edge because that is what the CLI reports.
 */

import {
  Marker,
  RulePack,
  SlotError,
  STRATEGIES,
  StrategyName,
  SlotValues,
  renderTemplate,
  templatesFor,
} from "./pack.js";

export class EmptyBodyError extends Error {}

export interface EngineToken {
  text: string;
  start: number;
  end: number;
}

// A token is a maximal run of letters, digits, or apostrophes.
const TOKEN_RE = /[A-Za-z0-9']+/g;

// Clause delimiters: sentence punctuation, a spaced hyphen, or the
// conjunction "but" standing alone between spaces.
const CLAUSE_SPLIT_RE = /[.!?]+|\s-\s|\sbut\s/gi;

// A greeting is one or two capitalized words and a comma before the
// rest of the body.
const GREETING_RE = /^\s*[A-Z][A-Za-z']*(?:\s+[A-Z][A-Za-z']*)?,\s*/;

const ENCODER = new TextEncoder();

export function tokenize(text: string): EngineToken[] {
  const out: EngineToken[] = [];
  const re = new RegExp(TOKEN_RE.source, "g");
  let m: RegExpExecArray | null;
  while ((m = re.exec(text)) !== null) {
    out.push({ text: m[0], start: m.index, end: m.index + m[0].length });
  }
  return out;
}

function whitespaceOnlyBetween(text: string, leftEnd: number, rightStart: number): boolean {
  return text.slice(leftEnd, rightStart).trim() === "";
}

interface Clause {
  text: string;
  start: number;
  end: number;
}

function splitClauses(text: string): Clause[] {
  const clauses: Clause[] = [];
  const re = new RegExp(CLAUSE_SPLIT_RE.source, "gi");
  let last = 0;
  let m: RegExpExecArray | null;
  while ((m = re.exec(text)) !== null) {
    const piece = text.slice(last, m.index);
    if (piece.trim()) {
      clauses.push({ text: piece, start: last, end: m.index });
    }
    last = m.index + m[0].length;
  }
  const tail = text.slice(last);
  if (tail.trim()) {
    clauses.push({ text: tail, start: last, end: text.length });
  }
  return clauses;
}

function byteOffset(text: string, charIndex: number): number {
  return ENCODER.encode(text.slice(0, charIndex)).length;
}

export interface MarkerHit {
  marker: Marker;
  start: number;
  end: number;
}

/* All marker occurrences, leftmost-longest, non-overlapping.  At each
 * token the longest matching pattern wins; equal-length candidates tie
 * toward the lexicographically smallest marker id.  A multi-word
 * pattern matches only when its tokens are separated by whitespace
 * alone.  Spans are UTF-16 indices into the text.
 */
export function matchMarkers(text: string, pack: RulePack): MarkerHit[] {
  const tokens = tokenize(text);
  const hits: MarkerHit[] = [];
  let i = 0;
  const n = tokens.length;
  while (i < n) {
    let best: Marker | null = null;
    let bestLen = 0;
    for (const marker of pack.markers) {
      const k = marker.words.length;
      if (i + k > n) continue;
      if (best !== null && (k < bestLen || (k === bestLen && marker.id >= best.id))) {
        continue;
      }
      if (wordsMatch(marker.words, tokens, i, text)) {
        best = marker;
        bestLen = k;
      }
    }
    if (best === null) {
      i += 1;
      continue;
    }
    hits.push({
      marker: best,
      start: tokens[i]!.start,
      end: tokens[i + bestLen - 1]!.end,
    });
    i += bestLen;
  }
  return hits;
}

function wordsMatch(
  words: string[],
  tokens: EngineToken[],
  start: number,
  text: string,
): boolean {
  for (let j = 0; j < words.length; j += 1) {
    const w = words[j]!;
    const tok = tokens[start + j]!;
    if (w !== "*" && tok.text.toLowerCase() !== w) {
      return false;
    }
    if (j > 0 && !whitespaceOnlyBetween(text, tokens[start + j - 1]!.end, tok.start)) {
      return false;
    }
  }
  return true;
}

export interface Classification {
  label: StrategyName;
  scores: Record<StrategyName, number>;
  hits: MarkerHit[];
}

/* Judge which strategy a body wears.  Request-core markers and markers
 * filed under the bald strategy carry no score, so an unmarked body
 * reads as bald on record.  Ties break toward the lower rank.
 */
export function classify(body: string, pack: RulePack): Classification {
  if (!body.trim()) {
    throw new EmptyBodyError("cannot classify a body with no visible text");
  }
  const scores = {
    bald_on_record: 0,
    positive: 0,
    negative: 0,
    off_record: 0,
  } as Record<StrategyName, number>;
  const hits = matchMarkers(body, pack);
  for (const hit of hits) {
    if (hit.marker.category === "request-core") continue;
    if (hit.marker.strategy === "bald_on_record") continue;
    scores[hit.marker.strategy] += hit.marker.weight;
  }
  const top = Math.max(...STRATEGIES.map((s) => scores[s]));
  const label = STRATEGIES.find((s) => scores[s] === top)!;
  return { label, scores, hits };
}

export interface HeadAct {
  tokens: string[];
  text: string;
  // UTF-8 byte range into the body, matching the CLI's report.
  span: [number, number];
}

function deleteSpans(
  text: string,
  spans: Array<[number, number]>,
): { kept: string; origin: number[] } {
  const cut = new Array<boolean>(text.length).fill(false);
  for (const [start, end] of spans) {
    for (let i = start; i < end; i += 1) {
      cut[i] = true;
    }
  }
  let kept = "";
  const origin: number[] = [];
  for (let i = 0; i < text.length; i += 1) {
    if (!cut[i]) {
      kept += text[i];
      origin.push(i);
    }
  }
  return { kept, origin };
}

/* Locate the request core inside a body: strip a leading greeting,
 * delete every matched marker span except request-core ones, split
 * what remains into clauses, and take the first clause holding a
 * request-core verb.  Tokens come back lowercased.  Returns null when
 * no clause qualifies.
 */
export function extractHeadAct(body: string, pack: RulePack): HeadAct | null {
  const m = GREETING_RE.exec(body);
  const base = m ? m[0].length : 0;
  const work = body.slice(base);
  const drop: Array<[number, number]> = matchMarkers(work, pack)
    .filter((hit) => hit.marker.category !== "request-core")
    .map((hit) => [hit.start, hit.end]);
  const { kept, origin } = deleteSpans(work, drop);
  for (const clause of splitClauses(kept)) {
    const tokens = tokenize(clause.text);
    const words = tokens.map((t) => t.text.toLowerCase());
    if (!words.some((w) => pack.coreVerbs.has(w))) {
      continue;
    }
    const first = tokens[0]!;
    const last = tokens[tokens.length - 1]!;
    const origStart = base + origin[clause.start + first.start]!;
    const origEnd = base + origin[clause.start + last.end - 1]! + 1;
    return {
      tokens: words,
      text: words.join(" "),
      span: [byteOffset(body, origStart), byteOffset(body, origEnd)],
    };
  }
  return null;
}

export interface RewriteResult {
  body: string;
  source: StrategyName;
  target: StrategyName;
}

/* Re-dress a body in the target strategy, keeping the head act.  The
 * head act is poured into the first template the pack offers for the
 * target.  Returns null when the body has no request core; throws
 * SlotError when the chosen template needs a slot the caller did not
 * fill.
 */
export function rewriteBody(
  body: string,
  target: StrategyName,
  pack: RulePack,
  slots?: Record<string, string>,
): RewriteResult | null {
  const source = classify(body, pack).label;
  const head = extractHeadAct(body, pack);
  if (head === null) {
    return null;
  }
  const template = templatesFor(pack, target)[0]!;
  const values: SlotValues = { head: head.text };
  if (slots) {
    for (const [name, value] of Object.entries(slots)) {
      if (name === "head") {
        throw new SlotError("the head slot is filled from the body itself");
      }
      values[name] = value;
    }
  }
  for (const slot of template.requiredSlots) {
    if (values[slot] === undefined) {
      throw new SlotError(`template (${target}) requires slot '${slot}'`);
    }
  }
  return { body: renderTemplate(template, values), source, target };
}
