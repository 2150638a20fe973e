/**
 * CLI: `serve` starts the HTTP service, `export` runs the offline batch
 * embedder against a corpus manifest.
 */

import { StubEncoder } from "./encoder.js";
import { batchExport } from "./export.js";
import { EmbedService, createApp } from "./service.js";

interface Flags {
  [key: string]: string | boolean;
}

function parseFlags(argv: string[]): { positional: string[]; flags: Flags } {
  const positional: string[] = [];
  const flags: Flags = {};
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg.startsWith("--")) {
      const key = arg.slice(2);
      const next = argv[i + 1];
      if (next !== undefined && !next.startsWith("--")) {
        flags[key] = next;
        i++;
      } else {
        flags[key] = true;
      }
    } else {
      positional.push(arg);
    }
  }
  return { positional, flags };
}

function buildEncoder(flags: Flags): StubEncoder {
  const model = String(flags["model"] ?? "stub");
  if (model !== "stub") {
    // Real transformer backends plug in behind the Encoder interface; this
    // build ships only the deterministic stub.
    throw new Error(`ModelNotFound: only the 'stub' encoder is bundled, got '${model}'`);
  }
  return new StubEncoder(model, Number(flags["dim"] ?? 16));
}

function main(): void {
  const [command, ...rest] = process.argv.slice(2);
  const { flags } = parseFlags(rest);
  if (command === "serve") {
    const service = new EmbedService({
      poolSpecials: flags["no-pool-specials"] ? false : true,
      countSpecials: flags["no-count-specials"] ? false : true,
    });
    service.load(buildEncoder(flags));
    const port = Number(flags["port"] ?? 8757);
    const app = createApp(service);
    app.listen(port, "127.0.0.1", () => {
      console.log(JSON.stringify({ listening: port, ...service.health() }));
    });
    return;
  }
  if (command === "export") {
    const manifest = flags["manifest"];
    const out = flags["out"];
    if (typeof manifest !== "string" || typeof out !== "string") {
      console.error("usage: export --manifest FILE --out FILE [--code-length N]");
      process.exit(2);
    }
    const encoder = buildEncoder(flags);
    try {
      const result = batchExport(encoder, manifest, out, {
        codeLength: Number(flags["code-length"] ?? 128),
        encoding: flags["binary"] ? "binary" : "jsonl",
        poolSpecials: flags["no-pool-specials"] ? false : true,
        countSpecials: flags["no-count-specials"] ? false : true,
      });
      console.log(JSON.stringify({ command: "export", out, ...result }));
    } catch (err) {
      console.error(`error: ${err instanceof Error ? err.message : err}`);
      process.exit(2);
    }
    return;
  }
  console.error("usage: embedsvc <serve|export> [flags]");
  process.exit(2);
}

main();
