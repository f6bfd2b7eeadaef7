import { EXPORT_DIMENSION, loadEncoder } from "./encoder.js";
import { ModelError } from "./errors.js";
import { readCleanedCorpus } from "./reader.js";
import {
  ExportManifest,
  formatRow,
  interchangeHeader,
  writeAtomic,
  writeManifest,
} from "./writer.js";

// Fixed batch size keeps the file layout a pure function of the input.
export const BATCH_SIZE = 128;

export async function exportEmbeddings(
  inPath: string,
  outPath: string,
  modelId: string,
): Promise<ExportManifest> {
  const corpus = readCleanedCorpus(inPath);
  const encoder = await loadEncoder(modelId);

  const lines = [interchangeHeader(encoder.dimension)];
  for (let start = 0; start < corpus.rows.length; start += BATCH_SIZE) {
    const batch = corpus.rows.slice(start, start + BATCH_SIZE);
    const vectors = await encoder.encode(batch.map((row) => row.text));
    for (let i = 0; i < batch.length; i++) {
      if (vectors[i].length !== EXPORT_DIMENSION) {
        throw new ModelError(
          `model ${modelId} emitted dimension ${vectors[i].length}, expected ${EXPORT_DIMENSION}`,
        );
      }
      lines.push(formatRow(batch[i].docId, batch[i].index, vectors[i]));
    }
  }
  writeAtomic(outPath, lines.join("\n") + "\n");

  const manifest: ExportManifest = {
    model: encoder.id,
    dimension: EXPORT_DIMENSION,
    normalized: true,
    documents: corpus.documents,
    sentences: corpus.rows.length,
  };
  writeManifest(outPath, manifest);
  return manifest;
}
