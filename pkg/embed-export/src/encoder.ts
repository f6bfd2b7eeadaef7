import { ModelError } from "./errors.js";

export const EXPORT_DIMENSION = 384;

// Built-in offline encoder id; anything else resolves through
// @xenova/transformers and needs the model available locally.
export const HASH_MODEL_ID = "hash-v1";
export const DEFAULT_MODEL_ID = "Xenova/all-MiniLM-L6-v2";

export interface SentenceEncoder {
  readonly id: string;
  readonly dimension: number;
  encode(texts: string[]): Promise<Float64Array[]>;
}

function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

// mulberry32: tiny seeded PRNG; integer ops only, so the stream is
// identical on every platform.
function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function tokenVector(token: string): Float64Array {
  const next = mulberry32(fnv1a(token));
  const vector = new Float64Array(EXPORT_DIMENSION);
  for (let i = 0; i < EXPORT_DIMENSION; i++) {
    vector[i] = 2 * next() - 1;
  }
  return vector;
}

function normalize(vector: Float64Array): Float64Array {
  let sum = 0;
  for (let i = 0; i < vector.length; i++) {
    sum += vector[i] * vector[i];
  }
  const norm = Math.sqrt(sum);
  if (norm < 1e-12) {
    // Degenerate input (no tokens): fall back to a fixed basis vector
    // so the output still has unit norm.
    const basis = new Float64Array(vector.length);
    basis[0] = 1;
    return basis;
  }
  const out = new Float64Array(vector.length);
  for (let i = 0; i < vector.length; i++) {
    out[i] = vector[i] / norm;
  }
  return out;
}

function encodeWithHash(text: string): Float64Array {
  const tokens = text.toLowerCase().split(/[^a-z0-9]+/).filter(Boolean);
  const sum = new Float64Array(EXPORT_DIMENSION);
  for (const token of tokens) {
    const vector = tokenVector(token);
    for (let i = 0; i < EXPORT_DIMENSION; i++) {
      sum[i] += vector[i];
    }
  }
  return normalize(sum);
}

function hashEncoder(): SentenceEncoder {
  return {
    id: HASH_MODEL_ID,
    dimension: EXPORT_DIMENSION,
    encode: async (texts) => texts.map(encodeWithHash),
  };
}

async function transformerEncoder(modelId: string): Promise<SentenceEncoder> {
  let extractor: any;
  try {
    // @ts-ignore -- optional dependency, resolved at runtime when installed
    const { pipeline } = await import("@xenova/transformers");
    extractor = await pipeline("feature-extraction", modelId);
  } catch (error) {
    throw new ModelError(`cannot load model ${modelId}: ${(error as Error).message}`);
  }
  return {
    id: modelId,
    dimension: EXPORT_DIMENSION,
    encode: async (texts) => {
      const output = await extractor(texts, { pooling: "mean", normalize: true });
      const [batch, size] = output.dims;
      if (batch !== texts.length || size !== EXPORT_DIMENSION) {
        throw new ModelError(
          `model ${modelId} returned shape ${output.dims}, expected ${texts.length}x${EXPORT_DIMENSION}`,
        );
      }
      const data: Float32Array = output.data;
      const vectors: Float64Array[] = [];
      for (let row = 0; row < batch; row++) {
        vectors.push(Float64Array.from(data.subarray(row * size, (row + 1) * size)));
      }
      return vectors;
    },
  };
}

export async function loadEncoder(modelId: string): Promise<SentenceEncoder> {
  if (modelId === HASH_MODEL_ID) {
    return hashEncoder();
  }
  return transformerEncoder(modelId);
}
