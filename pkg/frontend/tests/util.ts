/* Shared plumbing for the test suites: repo files, frozen fixtures,
 * and byte-level string comparison.
 */

import { readFileSync } from "node:fs";
import { resolve } from "node:path";

import { bindPack, PackBinding } from "../src/binding.js";

// vitest runs with the frontend directory as its root; import.meta.url
// is virtual under the DOM test environment, so resolve from cwd.
export function readRepoFile(relative: string): string {
  return readFileSync(resolve(process.cwd(), relative), "utf8");
}

export function exportedPackText(): string {
  return readRepoFile("extension/pack.json");
}

export function loadBinding(): PackBinding {
  return bindPack(exportedPackText());
}

export interface PageMessageFixture {
  id: string;
  body: string;
  source: string;
  expected: string | null;
}

export interface PageFixtures {
  target: string;
  messages: PageMessageFixture[];
}

export interface RewriteFixture {
  body: string;
  target: string;
  slots: Record<string, string>;
  expected: string;
  source: string;
}

export interface ClassifyFixture {
  body: string;
  label: string;
  scores: Record<string, number>;
}

export interface HeadFixture {
  body: string;
  segment: number;
  span: [number, number];
  text: string;
  tokens: string[];
}

export interface EngineFixtures {
  rewrites: RewriteFixture[];
  classifications: ClassifyFixture[];
  heads: HeadFixture[];
}

export function pageFixtures(): PageFixtures {
  return JSON.parse(readRepoFile("tests/fixtures/page.json"));
}

export function engineFixtures(): EngineFixtures {
  return JSON.parse(readRepoFile("tests/fixtures/engine.json"));
}

export function sameBytes(a: string, b: string): boolean {
  return Buffer.from(a, "utf8").equals(Buffer.from(b, "utf8"));
}
