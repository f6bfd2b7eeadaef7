#!/usr/bin/env node
import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { DEFAULT_MODEL_ID } from "./encoder.js";
import { InputError, ModelError, UsageError } from "./errors.js";
import { exportEmbeddings } from "./export.js";

export interface CliOptions {
  inPath: string;
  outPath: string;
  model: string;
}

export function parseCliArgs(argv: string[]): CliOptions {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        in: { type: "string" },
        out: { type: "string" },
        model: { type: "string", default: DEFAULT_MODEL_ID },
      },
    });
  } catch (error) {
    throw new UsageError((error as Error).message);
  }
  const { in: inPath, out: outPath, model } = parsed.values;
  if (!inPath || !outPath) {
    throw new UsageError("usage: graphlss-embed --in cleaned.jsonl --out sents.emb --model <id>");
  }
  return { inPath, outPath, model: model! };
}

export async function main(argv: string[]): Promise<number> {
  let options: CliOptions;
  try {
    options = parseCliArgs(argv);
  } catch (error) {
    console.error(`graphlss-embed: ${(error as Error).message}`);
    return 1;
  }
  try {
    const manifest = await exportEmbeddings(options.inPath, options.outPath, options.model);
    console.log(
      `wrote ${manifest.sentences} sentence vectors for ${manifest.documents} documents to ${options.outPath}`,
    );
    return 0;
  } catch (error) {
    if (error instanceof InputError) {
      console.error(`graphlss-embed: ${error.message}`);
      return 2;
    }
    if (error instanceof ModelError) {
      console.error(`graphlss-embed: ${error.message}`);
      return 3;
    }
    throw error;
  }
}

if (import.meta.url === pathToFileURL(process.argv[1]).href) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
