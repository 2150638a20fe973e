/** Corpus manifest reader (JSON lines, header record first). */

import { readFileSync } from "node:fs";

export class FormatViolation extends Error {
  constructor(message: string, line?: number) {
    super(line !== undefined ? `line ${line}: ${message}` : message);
  }
}

export interface ManifestHeader {
  label: string;
  language: string;
  minloc_applied: number;
}

export interface ManifestUnit {
  id: string;
  path: string;
  start: number;
  end: number;
  text: string;
}

const UNIT_KEYS: (keyof ManifestUnit)[] = ["id", "path", "start", "end", "text"];

export function readManifest(path: string): { header: ManifestHeader; units: ManifestUnit[] } {
  const lines = readFileSync(path, "utf-8").split("\n");
  if (lines.length === 0 || !lines[0].trim()) {
    throw new FormatViolation("empty manifest file", 1);
  }
  let header: ManifestHeader;
  try {
    header = JSON.parse(lines[0]);
  } catch (err) {
    throw new FormatViolation(`invalid header: ${(err as Error).message}`, 1);
  }
  for (const key of ["label", "language", "minloc_applied"]) {
    if (!(key in header)) throw new FormatViolation(`header missing key '${key}'`, 1);
  }
  const units: ManifestUnit[] = [];
  const seen = new Set<string>();
  lines.slice(1).forEach((raw, offset) => {
    const lineNo = offset + 2;
    if (!raw.trim()) return;
    let record: ManifestUnit;
    try {
      record = JSON.parse(raw);
    } catch (err) {
      throw new FormatViolation(`invalid record: ${(err as Error).message}`, lineNo);
    }
    for (const key of UNIT_KEYS) {
      if (!(key in record)) throw new FormatViolation(`record missing ${key}`, lineNo);
    }
    if (seen.has(record.id)) throw new FormatViolation(`duplicate id ${record.id}`, lineNo);
    seen.add(record.id);
    units.push(record);
  });
  return { header, units };
}
