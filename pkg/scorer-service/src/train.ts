/** Fine-tuning with log-uniform hyperparameter search and best-dev
 * checkpoint selection. The hypothesis-only trainer is the same loop on
 * premise-masked data (the mask can also be applied here for raw
 * pairs). */

import * as fs from "fs";
import * as path from "path";

import { CheckpointManifest, Example, Hparams, PromptClassifier } from "./classifier";
import { aucNorm } from "./metrics";
import { Rng } from "./rng";
import { PromptTemplate } from "./templates";

interface Range {
  low: number;
  high: number;
  scale: "log" | "log-int" | "int";
}

export type HparamRanges = Record<string, Range>;

export function loadRanges(rangesPath: string): HparamRanges {
  return JSON.parse(fs.readFileSync(rangesPath, "utf8"));
}

export function defaultRangesPath(): string {
  return path.join(__dirname, "..", "..", "data", "hparam-ranges.json");
}

function draw(rng: Rng, range: Range): number {
  if (range.scale === "log") return rng.logUniform(range.low, range.high);
  if (range.scale === "log-int") {
    return Math.max(
      Math.round(rng.logUniform(range.low, range.high)),
      Math.round(range.low),
    );
  }
  return rng.int(range.low, range.high);
}

export function sampleHparams(ranges: HparamRanges, rng: Rng): Hparams {
  return {
    learningRate: draw(rng, ranges.learning_rate),
    l2: draw(rng, ranges.l2),
    epochs: draw(rng, ranges.epochs),
    batchSize: draw(rng, ranges.batch_size),
  };
}

export function readExamples(jsonlPath: string, honly = false): Example[] {
  const out: Example[] = [];
  for (const line of fs.readFileSync(jsonlPath, "utf8").split("\n")) {
    if (!line.trim()) continue;
    const record = JSON.parse(line);
    out.push({
      premise: honly ? "true" : String(record.premise ?? ""),
      hypothesis: String(record.hypothesis ?? ""),
      label: Number(record.label) ? 1 : 0,
    });
  }
  return out;
}

export interface TrainOptions {
  subset: Example[];
  dev: Example[] | null;
  templates: PromptTemplate[];
  symmetricPrompts: boolean;
  nHparamSamples: number;
  seed: string;
  dims: number;
  ranges: HparamRanges;
}

export interface TrainResult {
  model: PromptClassifier;
  manifest: CheckpointManifest;
}

export function finetune(options: TrainOptions): TrainResult {
  if (options.subset.length === 0) {
    throw new Error("training subset is empty");
  }
  let train = options.subset;
  let dev = options.dev;
  if (!dev || dev.length === 0) {
    // Carve a seeded 80/20 dev split when none is supplied.
    const shuffled = new Rng(`${options.seed}:devsplit`).shuffle(train);
    const cut = Math.max(1, Math.floor(shuffled.length * 0.8));
    train = shuffled.slice(0, cut);
    dev = shuffled.slice(cut);
  }
  const devScorable =
    dev.length > 0 &&
    dev.some((e) => e.label === 1) &&
    dev.some((e) => e.label === 0);

  let best: { model: PromptClassifier; hparams: Hparams; score: number } | null =
    null;
  for (let trial = 0; trial < options.nHparamSamples; trial++) {
    const trialRng = new Rng(`${options.seed}:trial:${trial}`);
    const hparams = sampleHparams(options.ranges, trialRng);
    const model = PromptClassifier.fresh(
      options.dims,
      options.templates,
      options.symmetricPrompts,
    );
    model.train(train, hparams, trialRng);
    let score = 0;
    if (devScorable) {
      const scores = dev.map((e) => model.score(e.premise, e.hypothesis));
      const labels = dev.map((e) => e.label);
      score = aucNorm(scores, labels);
    }
    if (best === null || score > best.score) {
      best = { model, hparams, score };
    }
  }
  const manifest: CheckpointManifest = {
    model: "prompt-classifier",
    dims: options.dims,
    symmetricPrompts: options.symmetricPrompts,
    templates: options.templates,
    hparams: best!.hparams,
    seed: options.seed,
    devAucNorm: devScorable ? best!.score : null,
    trainedOn: train.length,
  };
  return { model: best!.model, manifest };
}
