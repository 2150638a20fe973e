/**
 * Wire protocol (JSON over loopback HTTP):
 *
 *   POST /embed   {model, code_length, texts[], echo}
 *     200 -> {model, dimension, echo, vectors[], errors[]}
 *            vectors[i] is null when errors carries an entry for index i
 *     4xx -> {error: {code, message}}
 *   GET  /health  {model, dimension, ready}
 *
 * The service is stateless per request and serves exactly one model per
 * instance; ensembles run N instances (or N sequential exports).
 */

import express, { Express } from "express";

import { Encoder } from "./encoder.js";
import { EmbedOptions, EmptyTokenization, embedText } from "./pooling.js";

export const MAX_BATCH = 256;

export interface EmbedRequest {
  model: string;
  code_length: number;
  texts: string[];
  echo?: string;
}

export interface PerTextError {
  index: number;
  code: string;
  message: string;
}

export class EmbedService {
  private encoder: Encoder | null = null;
  private readonly poolOptions: Omit<EmbedOptions, "codeLength">;

  constructor(options: Omit<EmbedOptions, "codeLength"> = {}) {
    this.poolOptions = options;
  }

  load(encoder: Encoder): void {
    this.encoder = encoder;
  }

  health(): { model: string | null; dimension: number | null; ready: boolean } {
    return {
      model: this.encoder?.name ?? null,
      dimension: this.encoder?.dimension ?? null,
      ready: this.encoder !== null,
    };
  }

  embedBatch(request: EmbedRequest): {
    vectors: (number[] | null)[];
    errors: PerTextError[];
    dimension: number;
  } {
    const encoder = this.encoder;
    if (encoder === null) {
      throw new ServiceUnavailable("no encoder loaded");
    }
    if (request.model !== encoder.name) {
      throw new ModelNotFound(`model ${JSON.stringify(request.model)} is not served here`);
    }
    if (!Array.isArray(request.texts) || request.texts.length === 0) {
      throw new BadRequest("texts must be a non-empty array of strings");
    }
    if (request.texts.length > MAX_BATCH) {
      throw new OversizeBatch(`batch of ${request.texts.length} exceeds limit ${MAX_BATCH}`);
    }
    if (!Number.isInteger(request.code_length) || request.code_length < 1) {
      throw new BadRequest("code_length must be a positive integer");
    }
    const vectors: (number[] | null)[] = [];
    const errors: PerTextError[] = [];
    request.texts.forEach((text, index) => {
      try {
        vectors.push(
          embedText(encoder, text, { ...this.poolOptions, codeLength: request.code_length }),
        );
      } catch (err) {
        vectors.push(null);
        errors.push({
          index,
          code: err instanceof EmptyTokenization ? "EmptyTokenization" : "EncodeError",
          message: err instanceof Error ? err.message : String(err),
        });
      }
    });
    return { vectors, errors, dimension: encoder.dimension };
  }
}

export class BadRequest extends Error {
  status = 400;
  code = "BadRequest";
}
export class ModelNotFound extends Error {
  status = 404;
  code = "ModelNotFound";
}
export class OversizeBatch extends Error {
  status = 413;
  code = "OversizeBatch";
}
export class ServiceUnavailable extends Error {
  status = 503;
  code = "ServiceUnavailable";
}

export function createApp(service: EmbedService): Express {
  const app = express();
  app.use(express.json({ limit: "64mb" }));

  app.get("/health", (_req, res) => {
    res.json(service.health());
  });

  app.post("/embed", (req, res) => {
    try {
      const body = req.body as EmbedRequest;
      const { vectors, errors, dimension } = service.embedBatch(body);
      res.json({
        model: body.model,
        dimension,
        echo: body.echo ?? null,
        vectors,
        errors,
      });
    } catch (err) {
      const status = (err as { status?: number }).status ?? 500;
      const code = (err as { code?: string }).code ?? "InternalError";
      res.status(status).json({
        error: { code, message: err instanceof Error ? err.message : String(err) },
      });
    }
  });

  app.use((_req, res) => {
    res.status(404).json({ error: { code: "NotFound", message: "unknown route" } });
  });

  return app;
}
