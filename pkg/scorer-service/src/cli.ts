#!/usr/bin/env node
/** Entry point.
 *
 *   serve --model cosine [--dims 256] [--tcp PORT]
 *   serve --checkpoint DIR [--tcp PORT]
 *   train --subset S.jsonl [--dev D.jsonl] [--out DIR] [--templates T.json]
 *         [--samples 100] [--seed s] [--symmetric] [--honly] [--dims 16384]
 *
 * In serve mode the process answers the line-JSON protocol on stdio
 * (or TCP with --tcp). Scores are in [0, 1]; cosine similarity is
 * mapped affinely from [-1, 1].
 */

import { PromptClassifier } from "./classifier";
import { cosine, embed } from "./features";
import { Handler, serveStdio, serveTcp } from "./protocol";
import { DEFAULT_TEMPLATES, loadTemplates } from "./templates";
import {
  defaultRangesPath,
  finetune,
  loadRanges,
  readExamples,
} from "./train";

interface ScoreItem {
  premise?: unknown;
  hypothesis?: unknown;
}

function parseArgs(argv: string[]): Map<string, string | boolean> {
  const out = new Map<string, string | boolean>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith("--")) continue;
    const key = arg.slice(2);
    if (i + 1 < argv.length && !argv[i + 1].startsWith("--")) {
      out.set(key, argv[i + 1]);
      i++;
    } else {
      out.set(key, true);
    }
  }
  return out;
}

function cosineHandler(dims: number): Handler {
  return (kind, items) => {
    if (kind !== "score") {
      throw new Error(`unsupported request kind: ${kind}`);
    }
    return (items as ScoreItem[]).map((item) => {
      const premise = String(item.premise ?? "");
      const hypothesis = String(item.hypothesis ?? "");
      const a = embed(premise, dims);
      const b = embed(hypothesis, dims);
      return (cosine(a, b) + 1) / 2;
    });
  };
}

function classifierHandler(model: PromptClassifier): Handler {
  return (kind, items) => {
    if (kind !== "score") {
      throw new Error(`unsupported request kind: ${kind}`);
    }
    return (items as ScoreItem[]).map((item) =>
      model.score(String(item.premise ?? ""), String(item.hypothesis ?? "")),
    );
  };
}

function cmdServe(args: Map<string, string | boolean>): number {
  let handler: Handler;
  try {
    if (args.has("checkpoint")) {
      handler = classifierHandler(
        PromptClassifier.load(String(args.get("checkpoint"))),
      );
    } else {
      const model = String(args.get("model") ?? "cosine");
      if (model !== "cosine") {
        throw new Error(`unknown model: ${model}`);
      }
      handler = cosineHandler(Number(args.get("dims") ?? 256));
    }
  } catch (error) {
    // Load failure: stay protocol-conformant by answering every
    // request with an error response.
    const message = error instanceof Error ? error.message : String(error);
    handler = () => {
      throw new Error(`model load failed: ${message}`);
    };
  }
  if (args.has("tcp")) {
    serveTcp(handler, Number(args.get("tcp")));
  } else {
    serveStdio(handler);
  }
  return 0;
}

function cmdTrain(args: Map<string, string | boolean>): number {
  const subsetPath = args.get("subset");
  if (!subsetPath) {
    process.stderr.write("train requires --subset\n");
    return 1;
  }
  const honly = Boolean(args.get("honly"));
  const subset = readExamples(String(subsetPath), honly);
  const devPath = args.get("dev");
  const dev = devPath ? readExamples(String(devPath), honly) : null;
  const templates = args.has("templates")
    ? loadTemplates(String(args.get("templates")))
    : DEFAULT_TEMPLATES;
  const ranges = loadRanges(
    args.has("ranges") ? String(args.get("ranges")) : defaultRangesPath(),
  );
  const result = finetune({
    subset,
    dev,
    templates,
    symmetricPrompts: Boolean(args.get("symmetric")),
    nHparamSamples: Number(args.get("samples") ?? 100),
    seed: String(args.get("seed") ?? "0"),
    dims: Number(args.get("dims") ?? 16384),
    ranges,
  });
  const outDir = String(args.get("out") ?? "checkpoint");
  result.model.save(outDir, result.manifest);
  process.stderr.write(
    JSON.stringify({
      event: "trained",
      out: outDir,
      devAucNorm: result.manifest.devAucNorm,
      hparams: result.manifest.hparams,
    }) + "\n",
  );
  return 0;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  const args = parseArgs(rest);
  if (command === "serve") return cmdServe(args);
  if (command === "train") return cmdTrain(args);
  process.stderr.write(
    "usage: scorer-service serve|train [options]\n",
  );
  return 1;
}

if (require.main === module) {
  const code = main(process.argv.slice(2));
  if (code !== 0) process.exit(code);
}
