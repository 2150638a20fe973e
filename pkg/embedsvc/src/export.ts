/** Offline mode: embed a whole corpus manifest into a vector-store file. */

import { renameSync, rmSync } from "node:fs";
import { writeFileSync } from "node:fs";

import { Encoder } from "./encoder.js";
import { readManifest } from "./manifest.js";
import { EmbedOptions, embedText } from "./pooling.js";
import { StoreRow, encodeBinary, encodeJsonl } from "./vectorstore.js";

export interface ExportOptions extends EmbedOptions {
  encoding?: "jsonl" | "binary";
}

/**
 * Reads the manifest, embeds every unit in manifest order, and writes the
 * vector store atomically (temp file + rename): a failed run leaves no
 * partial output behind.
 */
export function batchExport(
  encoder: Encoder,
  manifestPath: string,
  outPath: string,
  options: ExportOptions,
): { units: number; dimension: number } {
  const temp = `${outPath}.tmp`;
  try {
    const { units } = readManifest(manifestPath);
    const rows: StoreRow[] = units.map((unit) => ({
      unit_id: unit.id,
      vector: embedText(encoder, unit.text, options),
    }));
    const header = {
      model_id: encoder.name,
      dimension: encoder.dimension,
      normalized: false,
    };
    if ((options.encoding ?? "jsonl") === "jsonl") {
      writeFileSync(temp, encodeJsonl(header, rows), "utf-8");
    } else {
      writeFileSync(temp, encodeBinary(header, rows));
    }
    renameSync(temp, outPath);
    return { units: rows.length, dimension: encoder.dimension };
  } catch (err) {
    rmSync(temp, { force: true });
    throw err;
  }
}
