import { renameSync, writeFileSync } from "node:fs";

import { InputError } from "./errors.js";

export interface ExportManifest {
  model: string;
  dimension: number;
  normalized: boolean;
  documents: number;
  sentences: number;
}

export function interchangeHeader(dimension: number): string {
  return `graphlss-embeddings v1 dim=${dimension}`;
}

/** One interchange row. The grammar is whitespace-separated, so ids
 * that contain whitespace cannot be represented. */
export function formatRow(docId: string, index: number, vector: Float64Array): string {
  if (/\s/.test(docId) || docId.length === 0) {
    throw new InputError(`document id ${JSON.stringify(docId)} cannot be written`);
  }
  const parts = new Array<string>(vector.length + 2);
  parts[0] = docId;
  parts[1] = String(index);
  for (let i = 0; i < vector.length; i++) {
    parts[i + 2] = vector[i].toFixed(8);
  }
  return parts.join(" ");
}

/** Single atomic write: everything lands under the final name or not at all. */
export function writeAtomic(path: string, payload: string): void {
  const temp = `${path}.tmp`;
  writeFileSync(temp, payload, "utf-8");
  renameSync(temp, path);
}

export function manifestPath(outPath: string): string {
  return `${outPath}.manifest.json`;
}

export function writeManifest(outPath: string, manifest: ExportManifest): void {
  writeAtomic(manifestPath(outPath), JSON.stringify(manifest, null, 2) + "\n");
}
