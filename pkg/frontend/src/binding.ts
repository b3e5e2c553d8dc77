/* Binding to an exported rule pack.
 *
 * The lab CLI wraps its pack in a versioned envelope for display
 * extensions.  bindPack accepts exactly that envelope: the kind tag,
 * the format version, and the pack schema all have to match what the
 * exporter writes today, and the pack has to agree with itself (each
 * template's rendering must classify as the template's own strategy).
 * Anything else is refused with a PackError.
 */

import { classify } from "./engine.js";
import {
  PackError,
  RulePack,
  packFromDoc,
  renderTemplate,
} from "./pack.js";

export const PACK_KIND = "politeness-rule-pack";
export const PACK_FORMAT_VERSION = 1;

export interface PackBinding {
  formatVersion: number;
  rankBand: number;
  pack: RulePack;
}

export function bindPack(text: string): PackBinding {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (exc) {
    throw new PackError(`pack is not valid JSON: ${(exc as Error).message}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new PackError("pack envelope must be a JSON object");
  }
  const obj = doc as Record<string, unknown>;
  for (const key of Object.keys(obj)) {
    if (!["kind", "format_version", "rank_band", "pack"].includes(key)) {
      throw new PackError(`pack envelope: unknown field '${key}'`);
    }
  }
  if (obj.kind !== PACK_KIND) {
    throw new PackError(
      `pack kind must be '${PACK_KIND}', got ${JSON.stringify(obj.kind)}`,
    );
  }
  if (obj.format_version !== PACK_FORMAT_VERSION) {
    throw new PackError(
      `pack format_version must be ${PACK_FORMAT_VERSION}, ` +
        `got ${JSON.stringify(obj.format_version)}`,
    );
  }
  const band = obj.rank_band;
  if (typeof band !== "number" || !Number.isFinite(band) || band <= 0) {
    throw new PackError("pack rank_band must be a positive number");
  }
  if (!("pack" in obj)) {
    throw new PackError("pack envelope: missing field 'pack'");
  }
  const pack = packFromDoc(obj.pack);
  checkTemplateConsistency(pack);
  return { formatVersion: PACK_FORMAT_VERSION, rankBand: band, pack };
}

// Each template, rendered with sample values, must classify as its own
// strategy; otherwise the pack disagrees with itself.
function checkTemplateConsistency(pack: RulePack): void {
  const verb = pack.requestCoreVerbs[0]!;
  const sample = { head: `we ${verb} a report`, name: "Sam", deadline: "today" };
  pack.templates.forEach((template, i) => {
    const body = renderTemplate(template, sample);
    const label = classify(body, pack).label;
    if (label !== template.strategy) {
      throw new PackError(
        `template[${i}] (${template.strategy}): rendered sample classifies as ${label}`,
      );
    }
  });
}
