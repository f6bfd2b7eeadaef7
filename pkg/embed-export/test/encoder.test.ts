import { describe, expect, it } from "vitest";

import { EXPORT_DIMENSION, HASH_MODEL_ID, loadEncoder } from "../src/encoder.js";

function norm(vector: Float64Array): number {
  let sum = 0;
  for (const value of vector) sum += value * value;
  return Math.sqrt(sum);
}

describe("hash encoder", () => {
  it("emits 384-dimensional unit vectors", async () => {
    const encoder = await loadEncoder(HASH_MODEL_ID);
    expect(encoder.dimension).toBe(EXPORT_DIMENSION);
    const [vector] = await encoder.encode(["graphs encode structure"]);
    expect(vector.length).toBe(EXPORT_DIMENSION);
    expect(Math.abs(norm(vector) - 1)).toBeLessThan(1e-12);
  });

  it("is deterministic across calls and batches", async () => {
    const encoder = await loadEncoder(HASH_MODEL_ID);
    const [first] = await encoder.encode(["attention weighs neighbors"]);
    const [again, inBatch] = await encoder.encode([
      "attention weighs neighbors",
      "attention weighs neighbors",
    ]);
    expect(Array.from(first)).toEqual(Array.from(again));
    expect(Array.from(first)).toEqual(Array.from(inBatch));
  });

  it("separates different texts", async () => {
    const encoder = await loadEncoder(HASH_MODEL_ID);
    const [a, b] = await encoder.encode(["neural networks learn", "gradients flow backward"]);
    let dot = 0;
    for (let i = 0; i < a.length; i++) dot += a[i] * b[i];
    expect(Math.abs(dot)).toBeLessThan(0.5);
  });

  it("falls back to a unit basis vector for empty text", async () => {
    const encoder = await loadEncoder(HASH_MODEL_ID);
    const [vector] = await encoder.encode([""]);
    expect(vector[0]).toBe(1);
    expect(Math.abs(norm(vector) - 1)).toBeLessThan(1e-12);
  });
});
