/**
 * Encoders turn one text into a matrix of per-token embeddings.
 *
 * The service is model-agnostic: anything implementing `Encoder` can sit
 * behind the wire protocol. The built-in `StubEncoder` is deterministic and
 * weight-free so protocol and pooling behaviour can be tested with no
 * downloads; a real transformer backend implements the same interface.
 */

export const BOS = "<s>";
export const EOS = "</s>";

export interface Encoder {
  readonly name: string;
  readonly dimension: number;
  /** Word-level tokens of the raw text, before special tokens. */
  tokenize(text: string): string[];
  /** One embedding row per token, in token order. */
  encode(tokens: string[]): number[][];
}

/** 32-bit FNV-1a; stable across platforms. */
function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

/** mulberry32 PRNG over a 32-bit seed. */
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

/**
 * Deterministic hash-seeded encoder. Every distinct token string maps to a
 * fixed pseudo-random vector in [-1, 1); the same token always gets the
 * same row, so pooled outputs are reproducible byte-for-byte.
 */
export class StubEncoder implements Encoder {
  readonly name: string;
  readonly dimension: number;
  private readonly cache = new Map<string, number[]>();

  constructor(name = "stub", dimension = 16) {
    if (dimension < 1) throw new Error("dimension must be >= 1");
    this.name = name;
    this.dimension = dimension;
  }

  tokenize(text: string): string[] {
    const trimmed = text.trim();
    return trimmed ? trimmed.split(/\s+/) : [];
  }

  encode(tokens: string[]): number[][] {
    return tokens.map((token) => this.tokenVector(token));
  }

  private tokenVector(token: string): number[] {
    const cached = this.cache.get(token);
    if (cached) return cached;
    const next = mulberry32(fnv1a(token));
    const vector = Array.from({ length: this.dimension }, () => next() * 2 - 1);
    this.cache.set(token, vector);
    return vector;
  }
}
