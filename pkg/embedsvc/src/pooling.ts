import { BOS, EOS, Encoder } from "./encoder.js";

export interface EmbedOptions {
  /** Max token positions fed to the encoder; longer sequences are cut. */
  codeLength: number;
  /** Count special tokens toward the truncation limit (default true). */
  countSpecials?: boolean;
  /** Include special-token rows in the mean pool (default true). */
  poolSpecials?: boolean;
}

export class EmptyTokenization extends Error {}

/** Column-wise arithmetic mean of the matrix rows. */
export function meanPool(matrix: number[][]): number[] {
  if (matrix.length === 0) throw new Error("cannot pool an empty matrix");
  const width = matrix[0].length;
  const pooled = new Array<number>(width).fill(0);
  for (const row of matrix) {
    for (let j = 0; j < width; j++) pooled[j] += row[j];
  }
  for (let j = 0; j < width; j++) pooled[j] /= matrix.length;
  return pooled;
}

/**
 * Full single-text pipeline: tokenize, wrap with special tokens, truncate to
 * `codeLength` positions, encode, mean-pool all token embeddings.
 */
export function embedText(encoder: Encoder, text: string, options: EmbedOptions): number[] {
  const words = encoder.tokenize(text);
  if (words.length === 0) {
    throw new EmptyTokenization("text produced no tokens");
  }
  const countSpecials = options.countSpecials ?? true;
  const poolSpecials = options.poolSpecials ?? true;
  let sequence = [BOS, ...words, EOS];
  if (countSpecials) {
    sequence = sequence.slice(0, options.codeLength);
  } else {
    const keptWords = words.slice(0, options.codeLength);
    sequence = [BOS, ...keptWords, EOS];
  }
  const matrix = encoder.encode(sequence);
  const pooled = sequence
    .map((token, i) => ({ token, row: matrix[i] }))
    .filter(({ token }) => poolSpecials || (token !== BOS && token !== EOS))
    .map(({ row }) => row);
  return meanPool(pooled);
}
