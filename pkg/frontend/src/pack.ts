/* Rule pack data model and validation.
 *
 * The pack arrives as JSON from the lab CLI's extension export.  This
 * module checks the document shape hard and turns it into typed
 * objects; rule evaluation itself lives in engine.ts.  Anything the
 * exporter would refuse to load must be refused here too.
 */

export class PackError extends Error {}

export class SlotError extends Error {}

export const STRATEGIES = [
  "bald_on_record",
  "positive",
  "negative",
  "off_record",
] as const;

export type StrategyName = (typeof STRATEGIES)[number];

export const CATEGORIES = new Set([
  "address",
  "hedge",
  "deference",
  "solidarity",
  "urgency",
  "hint",
  "request-core",
]);

export const SLOT_NAMES = new Set(["head", "name", "deadline"]);

export const MAX_PATTERN_WORDS = 12;

export interface Marker {
  id: string;
  category: string;
  strategy: StrategyName;
  pattern: string;
  weight: number;
  words: string[];
}

export interface Template {
  strategy: StrategyName;
  body: string;
  requiredSlots: Set<string>;
  optionalSlots: Set<string>;
}

export interface RulePack {
  version: string;
  language: string;
  markers: Marker[];
  templates: Template[];
  requestCoreVerbs: string[];
  coreVerbs: Set<string>;
}

export function templatesFor(pack: RulePack, strategy: StrategyName): Template[] {
  return pack.templates.filter((t) => t.strategy === strategy);
}

function isStrategyName(name: string): name is StrategyName {
  return (STRATEGIES as readonly string[]).includes(name);
}

function strategyFromName(name: unknown, where: string): StrategyName {
  if (typeof name !== "string" || !isStrategyName(name)) {
    throw new PackError(
      `${where}: unknown strategy name ${JSON.stringify(name)}`,
    );
  }
  return name;
}

type FieldKind = "string" | "number" | "list" | "object";

function requireFields(
  obj: Record<string, unknown>,
  allowed: Record<string, FieldKind>,
  where: string,
): void {
  for (const key of Object.keys(obj)) {
    if (!(key in allowed)) {
      throw new PackError(`${where}: unknown field '${key}'`);
    }
  }
  for (const [key, kind] of Object.entries(allowed)) {
    if (!(key in obj)) {
      throw new PackError(`${where}: missing field '${key}'`);
    }
    const value = obj[key];
    const ok =
      kind === "string"
        ? typeof value === "string"
        : kind === "number"
          ? typeof value === "number" && Number.isFinite(value)
          : kind === "list"
            ? Array.isArray(value)
            : typeof value === "object" && value !== null && !Array.isArray(value);
    if (!ok) {
      throw new PackError(`${where}: field '${key}' must be a ${kind}`);
    }
  }
}

// One maximal run of letters, digits, or apostrophes.  Must stay in
// lockstep with the matcher's idea of a token (engine.ts).
const PATTERN_WORD_RE = /^[A-Za-z0-9']+$/;

function checkPattern(pattern: string, where: string): void {
  const words = pattern.split(/\s+/).filter((w) => w.length > 0);
  if (words.length < 1 || words.length > MAX_PATTERN_WORDS) {
    throw new PackError(
      `${where}: pattern must have 1 to ${MAX_PATTERN_WORDS} words, ` +
        `got ${words.length}`,
    );
  }
  const wildcards = words.filter((w) => w === "*").length;
  if (wildcards > 1) {
    throw new PackError(`${where}: at most one '*' wildcard is allowed`);
  }
  for (const w of words) {
    if (w === "*") continue;
    if (!PATTERN_WORD_RE.test(w)) {
      throw new PackError(
        `${where}: pattern word '${w}' must be a single plain word`,
      );
    }
  }
}

function markerFromDoc(obj: unknown, index: number): Marker {
  let where = `marker[${index}]`;
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new PackError(`${where}: must be an object`);
  }
  const doc = obj as Record<string, unknown>;
  requireFields(
    doc,
    {
      id: "string",
      category: "string",
      strategy: "string",
      pattern: "string",
      weight: "number",
    },
    where,
  );
  const id = doc.id as string;
  if (!id) {
    throw new PackError(`${where}: id must be non-empty`);
  }
  where = `marker '${id}'`;
  const category = doc.category as string;
  if (!CATEGORIES.has(category)) {
    throw new PackError(`${where}: unknown category '${category}'`);
  }
  const strategy = strategyFromName(doc.strategy, where);
  const weight = doc.weight as number;
  if (weight <= 0) {
    throw new PackError(`${where}: weight must be positive`);
  }
  const pattern = doc.pattern as string;
  checkPattern(pattern, where);
  return {
    id,
    category,
    strategy,
    pattern,
    weight,
    words: pattern.split(/\s+/).filter((w) => w.length > 0).map((w) => w.toLowerCase()),
  };
}

function verbsFromDoc(raw: unknown[]): string[] {
  if (raw.length === 0) {
    throw new PackError("request_core_verbs must be non-empty");
  }
  const verbs: string[] = [];
  for (const v of raw) {
    if (typeof v !== "string" || !v) {
      throw new PackError("request_core_verbs entries must be non-empty strings");
    }
    if (!PATTERN_WORD_RE.test(v)) {
      throw new PackError(`request-core verb '${v}' must be a single plain word`);
    }
    verbs.push(v.toLowerCase());
  }
  if (new Set(verbs).size !== verbs.length) {
    throw new PackError("request_core_verbs contains duplicates");
  }
  return verbs.sort();
}

function slotSet(raw: unknown[], where: string, which: string): Set<string> {
  const slots = new Set<string>();
  for (const s of raw) {
    if (typeof s !== "string" || !SLOT_NAMES.has(s)) {
      throw new PackError(
        `${where}: ${which} entry ${JSON.stringify(s)} is not a known slot`,
      );
    }
    if (slots.has(s)) {
      throw new PackError(`${where}: ${which} lists '${s}' twice`);
    }
    slots.add(s);
  }
  return slots;
}

function templateFromDoc(obj: unknown, index: number): Template {
  let where = `template[${index}]`;
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new PackError(`${where}: must be an object`);
  }
  const doc = obj as Record<string, unknown>;
  requireFields(
    doc,
    {
      strategy: "string",
      body: "string",
      required_slots: "list",
      optional_slots: "list",
    },
    where,
  );
  const strategy = strategyFromName(doc.strategy, where);
  where = `template[${index}] (${strategy})`;
  const required = slotSet(doc.required_slots as unknown[], where, "required_slots");
  const optional = slotSet(doc.optional_slots as unknown[], where, "optional_slots");
  for (const s of required) {
    if (optional.has(s)) {
      throw new PackError(`${where}: slots cannot be both required and optional`);
    }
  }
  if (!required.has("head")) {
    throw new PackError(`${where}: required_slots must include 'head'`);
  }
  const template: Template = {
    strategy,
    body: doc.body as string,
    requiredSlots: required,
    optionalSlots: optional,
  };
  checkTemplateShape(template, where);
  return template;
}

// Template bodies parse into a flat list of parts: literal text, a
// {slot}, or a [bracketed region] holding exactly one optional slot.

export type TemplatePart =
  | { kind: "text"; text: string }
  | { kind: "slot"; slot: string }
  | { kind: "region"; parts: TemplatePart[]; slot: string };

export function parseTemplateBody(body: string, where: string): TemplatePart[] {
  const parts: TemplatePart[] = [];
  let buf = "";
  const flush = () => {
    if (buf) {
      parts.push({ kind: "text", text: buf });
      buf = "";
    }
  };
  let i = 0;
  while (i < body.length) {
    const ch = body[i]!;
    if (ch === "[") {
      flush();
      const close = body.indexOf("]", i + 1);
      if (close < 0) {
        throw new PackError(`${where}: unclosed '[' in body`);
      }
      const inner = parseTemplateBody(body.slice(i + 1, close), where);
      if (inner.some((p) => p.kind === "region")) {
        throw new PackError(`${where}: regions cannot nest`);
      }
      const slots = inner.filter((p) => p.kind === "slot").map((p) => p.slot);
      if (slots.length !== 1) {
        throw new PackError(`${where}: a bracketed region must hold exactly one slot`);
      }
      parts.push({ kind: "region", parts: inner, slot: slots[0]! });
      i = close + 1;
    } else if (ch === "]") {
      throw new PackError(`${where}: unmatched ']' in body`);
    } else if (ch === "{") {
      flush();
      const close = body.indexOf("}", i + 1);
      if (close < 0) {
        throw new PackError(`${where}: unclosed '{' in body`);
      }
      const slot = body.slice(i + 1, close);
      if (!SLOT_NAMES.has(slot)) {
        throw new PackError(`${where}: body names unknown slot '${slot}'`);
      }
      parts.push({ kind: "slot", slot });
      i = close + 1;
    } else {
      buf += ch;
      i += 1;
    }
  }
  flush();
  return parts;
}

function checkTemplateShape(template: Template, where: string): void {
  const parts = parseTemplateBody(template.body, where);
  const bare = new Set(
    parts.filter((p) => p.kind === "slot").map((p) => (p as { slot: string }).slot),
  );
  const regioned = new Set(
    parts.filter((p) => p.kind === "region").map((p) => (p as { slot: string }).slot),
  );
  for (const slot of bare) {
    if (!template.requiredSlots.has(slot)) {
      throw new PackError(
        `${where}: slot '${slot}' appears bare in the body but is not in required_slots`,
      );
    }
  }
  for (const slot of regioned) {
    if (!template.optionalSlots.has(slot)) {
      throw new PackError(
        `${where}: slot '${slot}' appears in a region but is not in optional_slots`,
      );
    }
  }
  for (const slot of template.requiredSlots) {
    if (!bare.has(slot)) {
      throw new PackError(`${where}: required slot '${slot}' never appears bare`);
    }
  }
  for (const slot of template.optionalSlots) {
    if (!regioned.has(slot)) {
      throw new PackError(`${where}: optional slot '${slot}' never appears in a region`);
    }
  }
}

export type SlotValues = Record<string, string | undefined>;

/* Fill a template.  Required slots must have a value; optional slots
 * without one erase their whole bracketed region.  The head is
 * capitalized exactly when it starts the rendered body or follows
 * sentence punctuation; elsewhere it is inserted verbatim.
 */
export function renderTemplate(template: Template, values: SlotValues): string {
  for (const slot of Object.keys(values)) {
    if (!SLOT_NAMES.has(slot)) {
      throw new SlotError(`unknown slot '${slot}'`);
    }
  }
  const parts = parseTemplateBody(template.body, `template (${template.strategy})`);
  const out: string[] = [];
  renderParts(parts, template, values, out);
  return out.join("");
}

function renderParts(
  parts: TemplatePart[],
  template: Template,
  values: SlotValues,
  out: string[],
): void {
  for (const part of parts) {
    if (part.kind === "text") {
      out.push(part.text);
    } else if (part.kind === "slot") {
      const value = values[part.slot];
      if (value === undefined) {
        throw new SlotError(
          `template (${template.strategy}) requires slot '${part.slot}'`,
        );
      }
      out.push(cased(part.slot, value, out));
    } else if (values[part.slot] !== undefined) {
      renderParts(part.parts, template, values, out);
    }
  }
}

function cased(slot: string, value: string, out: string[]): string {
  if (slot !== "head" || !value) {
    return value;
  }
  const before = out.join("").trimEnd();
  if (before === "" || ".!?".includes(before[before.length - 1]!)) {
    return value[0]!.toUpperCase() + value.slice(1);
  }
  return value;
}

export function packFromDoc(doc: unknown): RulePack {
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new PackError("pack root must be a JSON object");
  }
  const obj = doc as Record<string, unknown>;
  requireFields(
    obj,
    {
      version: "string",
      language: "string",
      markers: "list",
      templates: "list",
      request_core_verbs: "list",
    },
    "pack",
  );
  if (obj.language !== "en") {
    throw new PackError(
      `pack language must be 'en', got ${JSON.stringify(obj.language)}`,
    );
  }
  if (!obj.version) {
    throw new PackError("pack version must be a non-empty string");
  }

  const markers = (obj.markers as unknown[]).map((m, i) => markerFromDoc(m, i));
  const seen = new Set<string>();
  for (const m of markers) {
    if (seen.has(m.id)) {
      throw new PackError(`marker id '${m.id}' appears more than once`);
    }
    seen.add(m.id);
  }

  const verbs = verbsFromDoc(obj.request_core_verbs as unknown[]);
  const templates = (obj.templates as unknown[]).map((t, i) => templateFromDoc(t, i));

  const pack: RulePack = {
    version: obj.version as string,
    language: obj.language,
    markers,
    templates,
    requestCoreVerbs: verbs,
    coreVerbs: new Set(verbs),
  };
  checkCoverage(pack);
  return pack;
}

function checkCoverage(pack: RulePack): void {
  for (const strategy of STRATEGIES) {
    if (templatesFor(pack, strategy).length === 0) {
      throw new PackError(`pack has no template for strategy ${strategy}`);
    }
    if (strategy === "bald_on_record") continue;
    const marked = pack.markers.some(
      (m) => m.strategy === strategy && m.category !== "request-core",
    );
    if (!marked) {
      throw new PackError(`pack has no marker for strategy ${strategy}`);
    }
  }
}
