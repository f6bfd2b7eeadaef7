import { readFileSync } from "node:fs";

import { InputError } from "./errors.js";

export interface SentenceRow {
  docId: string;
  index: number;
  text: string;
}

export interface CleanedCorpus {
  documents: number;
  rows: SentenceRow[];
}

/** Read cleaned JSON-lines documents into one flat row per sentence. */
export function readCleanedCorpus(path: string): CleanedCorpus {
  let raw: string;
  try {
    raw = readFileSync(path, "utf-8");
  } catch (error) {
    throw new InputError(`cannot read ${path}: ${(error as Error).message}`);
  }

  const rows: SentenceRow[] = [];
  let documents = 0;
  const lines = raw.split("\n");
  for (let lineNumber = 1; lineNumber <= lines.length; lineNumber++) {
    const line = lines[lineNumber - 1].trim();
    if (!line) continue;

    let record: any;
    try {
      record = JSON.parse(line);
    } catch (error) {
      throw new InputError(`${path} line ${lineNumber}: ${(error as Error).message}`);
    }
    if (typeof record.id !== "string" || !Array.isArray(record.sentences)) {
      throw new InputError(`${path} line ${lineNumber}: expected id and sentences fields`);
    }
    documents += 1;
    for (const sentence of record.sentences) {
      if (typeof sentence.index !== "number" || typeof sentence.raw_text !== "string") {
        throw new InputError(
          `${path} line ${lineNumber}: sentence needs index and raw_text fields`,
        );
      }
      rows.push({ docId: record.id, index: sentence.index, text: sentence.raw_text });
    }
  }
  return { documents, rows };
}
