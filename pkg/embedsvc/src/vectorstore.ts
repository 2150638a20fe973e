/**
 * Vector-store writers, bit-compatible with the engine's format.
 *
 * JSONL: one header record {model_id, dimension, normalized}, then one row
 * per unit {unit_id, vector}. Binary: 16-byte magic+version, uint32-LE
 * header length, header JSON, then per row a uint32-LE id length, the id
 * bytes, and dimension little-endian float32 values. Vector components are
 * rounded through float32 either way.
 */

import { writeFileSync } from "node:fs";

export const MAGIC = Buffer.from("CLONESIFTVEC0001", "ascii");

export interface StoreHeader {
  model_id: string;
  dimension: number;
  normalized: boolean;
}

export interface StoreRow {
  unit_id: string;
  vector: number[];
}

function headerJson(header: StoreHeader): string {
  // Keys in lexicographic order, matching the engine's canonical dumps.
  return JSON.stringify({
    dimension: header.dimension,
    model_id: header.model_id,
    normalized: header.normalized,
  });
}

export function encodeJsonl(header: StoreHeader, rows: StoreRow[]): string {
  const lines = [headerJson(header)];
  for (const row of rows) {
    if (row.vector.length !== header.dimension) {
      throw new Error(`unit ${row.unit_id}: dimension ${row.vector.length} != ${header.dimension}`);
    }
    const rounded = Array.from(new Float32Array(row.vector));
    lines.push(JSON.stringify({ unit_id: row.unit_id, vector: rounded }));
  }
  return lines.join("\n") + "\n";
}

export function encodeBinary(header: StoreHeader, rows: StoreRow[]): Buffer {
  const headerBytes = Buffer.from(headerJson(header), "utf-8");
  const lengthPrefix = Buffer.alloc(4);
  lengthPrefix.writeUInt32LE(headerBytes.length);
  const parts: Buffer[] = [MAGIC, lengthPrefix, headerBytes];
  for (const row of rows) {
    if (row.vector.length !== header.dimension) {
      throw new Error(`unit ${row.unit_id}: dimension ${row.vector.length} != ${header.dimension}`);
    }
    const id = Buffer.from(row.unit_id, "utf-8");
    const idLength = Buffer.alloc(4);
    idLength.writeUInt32LE(id.length);
    const floats = new Float32Array(row.vector);
    parts.push(idLength, id, Buffer.from(floats.buffer, floats.byteOffset, floats.byteLength));
  }
  return Buffer.concat(parts);
}

export function writeVectorStore(
  path: string,
  header: StoreHeader,
  rows: StoreRow[],
  encoding: "jsonl" | "binary" = "jsonl",
): void {
  if (encoding === "jsonl") {
    writeFileSync(path, encodeJsonl(header, rows), "utf-8");
  } else {
    writeFileSync(path, encodeBinary(header, rows));
  }
}
