import { existsSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { mkdtempSync } from "node:fs";

import { describe, expect, it } from "vitest";

import { InputError } from "../src/errors.js";
import { formatRow, interchangeHeader, writeAtomic } from "../src/writer.js";

describe("interchange writer", () => {
  it("renders the versioned header", () => {
    expect(interchangeHeader(384)).toBe("graphlss-embeddings v1 dim=384");
  });

  it("formats rows as id, index, then fixed-point components", () => {
    const row = formatRow("doc-1", 4, Float64Array.from([0.5, -0.25]));
    expect(row).toBe("doc-1 4 0.50000000 -0.25000000");
  });

  it("rejects ids the whitespace grammar cannot carry", () => {
    expect(() => formatRow("doc 1", 0, Float64Array.from([1]))).toThrow(InputError);
    expect(() => formatRow("", 0, Float64Array.from([1]))).toThrow(InputError);
    expect(() => formatRow("doc\t1", 0, Float64Array.from([1]))).toThrow(InputError);
  });

  it("writes atomically and cleans up the staging file", () => {
    const dir = mkdtempSync(join(tmpdir(), "embed-writer-"));
    const target = join(dir, "out.emb");
    writeAtomic(target, "payload\n");
    expect(readFileSync(target, "utf-8")).toBe("payload\n");
    expect(existsSync(`${target}.tmp`)).toBe(false);
  });
});
