/** Text featurization: tokenization and hashed bag-of-ngram features. */

import { fnv1a } from "./rng";

export function tokenize(text: string): string[] {
  const matches = text.toLowerCase().match(/[\p{L}\p{N}]+/gu);
  return matches ? matches : [];
}

/** Token unigrams and bigrams, optionally salted with a slot prefix so
 * premise and hypothesis occurrences hash apart. */
export function ngrams(tokens: string[], salt = ""): string[] {
  const grams: string[] = [];
  for (const tok of tokens) grams.push(salt + tok);
  for (let i = 0; i + 1 < tokens.length; i++) {
    grams.push(`${salt}${tokens[i]}_${tokens[i + 1]}`);
  }
  return grams;
}

/** Sparse hashed counts: feature index -> count. */
export function hashedCounts(grams: string[], dims: number): Map<number, number> {
  const counts = new Map<number, number>();
  for (const gram of grams) {
    const idx = fnv1a(gram) % dims;
    counts.set(idx, (counts.get(idx) ?? 0) + 1);
  }
  return counts;
}

/** Dense signed hashed embedding, L2-normalized; zero text embeds to
 * the zero vector. */
export function embed(text: string, dims = 256): Float64Array {
  const vec = new Float64Array(dims);
  for (const gram of ngrams(tokenize(text))) {
    const h = fnv1a(gram);
    const idx = h % dims;
    const sign = fnv1a(gram, 0x01000193) & 1 ? 1 : -1;
    vec[idx] += sign;
  }
  let norm = 0;
  for (const v of vec) norm += v * v;
  norm = Math.sqrt(norm);
  if (norm > 0) {
    for (let i = 0; i < dims; i++) vec[i] /= norm;
  }
  return vec;
}

export function cosine(a: Float64Array, b: Float64Array): number {
  let dot = 0;
  for (let i = 0; i < a.length; i++) dot += a[i] * b[i];
  return dot;
}
