/** Logistic prompt classifier over hashed n-gram features.
 *
 * Each premise/hypothesis pair is rendered through the prompt templates;
 * features are hashed from the instance text plus slot-salted premise
 * and hypothesis n-grams, so the model has the capacity for directional
 * judgements unless symmetric prompts wash that signal out.
 */

import * as fs from "fs";
import * as path from "path";

import { hashedCounts, ngrams, tokenize } from "./features";
import { Rng } from "./rng";
import { PromptTemplate, renderAll } from "./templates";

export interface Example {
  premise: string;
  hypothesis: string;
  label: number;
}

export interface Hparams {
  learningRate: number;
  l2: number;
  epochs: number;
  batchSize: number;
}

export interface CheckpointManifest {
  model: string;
  dims: number;
  symmetricPrompts: boolean;
  templates: PromptTemplate[];
  hparams: Hparams;
  seed: string;
  devAucNorm: number | null;
  trainedOn: number;
}

export class PromptClassifier {
  constructor(
    public readonly dims: number,
    public readonly templates: PromptTemplate[],
    public readonly symmetricPrompts: boolean,
    public weights: Float64Array,
    public bias = 0,
  ) {}

  static fresh(
    dims: number,
    templates: PromptTemplate[],
    symmetricPrompts: boolean,
  ): PromptClassifier {
    return new PromptClassifier(
      dims,
      templates,
      symmetricPrompts,
      new Float64Array(dims),
    );
  }

  featurize(premise: string, hypothesis: string): Map<number, number> {
    const grams: string[] = [];
    for (const instance of renderAll(
      this.templates,
      premise,
      hypothesis,
      this.symmetricPrompts,
    )) {
      grams.push(...ngrams(tokenize(instance)));
    }
    if (!this.symmetricPrompts) {
      // Slot-salted n-grams give the model directional capacity. With
      // symmetric prompts the input must carry no directional signal,
      // so these are dropped and the rendered set is reversal-closed.
      grams.push(...ngrams(tokenize(premise), "P:"));
      grams.push(...ngrams(tokenize(hypothesis), "H:"));
    }
    return hashedCounts(grams, this.dims);
  }

  score(premise: string, hypothesis: string): number {
    const features = this.featurize(premise, hypothesis);
    // Accumulate in index order: the sum must not depend on feature
    // insertion order, or symmetric prompts would break at the last ulp.
    const indexes = Array.from(features.keys()).sort((a, b) => a - b);
    let z = this.bias;
    for (const idx of indexes) {
      z += this.weights[idx] * features.get(idx)!;
    }
    return 1 / (1 + Math.exp(-z));
  }

  /** One SGD pass set; in-place. */
  train(examples: Example[], hparams: Hparams, rng: Rng): void {
    for (let epoch = 0; epoch < hparams.epochs; epoch++) {
      const order = rng.shuffle(examples);
      for (const ex of order) {
        const features = this.featurize(ex.premise, ex.hypothesis);
        let z = this.bias;
        for (const [idx, count] of features) {
          z += this.weights[idx] * count;
        }
        const p = 1 / (1 + Math.exp(-z));
        const gradient = p - ex.label;
        const lr = hparams.learningRate;
        for (const [idx, count] of features) {
          this.weights[idx] -=
            lr * (gradient * count + hparams.l2 * this.weights[idx]);
        }
        this.bias -= lr * gradient;
      }
    }
  }

  save(directory: string, manifest: CheckpointManifest): void {
    fs.mkdirSync(directory, { recursive: true });
    fs.writeFileSync(
      path.join(directory, "manifest.json"),
      JSON.stringify(manifest, null, 2) + "\n",
    );
    fs.writeFileSync(
      path.join(directory, "weights.json"),
      JSON.stringify({ bias: this.bias, weights: Array.from(this.weights) }) +
        "\n",
    );
  }

  static load(directory: string): PromptClassifier {
    const manifest: CheckpointManifest = JSON.parse(
      fs.readFileSync(path.join(directory, "manifest.json"), "utf8"),
    );
    const payload = JSON.parse(
      fs.readFileSync(path.join(directory, "weights.json"), "utf8"),
    );
    const model = new PromptClassifier(
      manifest.dims,
      manifest.templates,
      manifest.symmetricPrompts,
      Float64Array.from(payload.weights),
      payload.bias,
    );
    return model;
  }
}
