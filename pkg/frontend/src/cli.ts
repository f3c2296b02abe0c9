#!/usr/bin/env node
/**
 * export <saved_model> --out model.json [--sidecar weights.nnwb]
 *
 * Converts a TensorFlow.js layers model (model.json + weight shards)
 * into an nn2c model document, optionally with a binary weight sidecar.
 */

import * as fs from "fs";

import { exportModel } from "./export.js";
import { ExportError } from "./schema.js";

const USAGE =
  "usage: export <saved_model> --out model.json [--sidecar weights.nnwb]";

interface Args {
  modelPath: string;
  out: string;
  sidecar?: string;
}

function parseArgs(argv: string[]): Args {
  const rest = argv[0] === "export" ? argv.slice(1) : argv.slice();
  let modelPath: string | undefined;
  let out: string | undefined;
  let sidecar: string | undefined;
  for (let i = 0; i < rest.length; i++) {
    const arg = rest[i];
    if (arg === "--out") {
      out = rest[++i];
    } else if (arg === "--sidecar") {
      sidecar = rest[++i];
    } else if (arg === "--help" || arg === "-h") {
      console.log(USAGE);
      process.exit(0);
    } else if (!modelPath) {
      modelPath = arg;
    } else {
      throw new ExportError(`unexpected argument '${arg}'\n${USAGE}`);
    }
  }
  if (!modelPath || !out) {
    throw new ExportError(USAGE);
  }
  return { modelPath, out, sidecar };
}

function main() {
  let args: Args;
  try {
    args = parseArgs(process.argv.slice(2));
    const result = exportModel(args.modelPath, { sidecar: !!args.sidecar });
    fs.writeFileSync(args.out, result.document);
    console.error(`wrote ${args.out}`);
    if (args.sidecar && result.sidecar) {
      fs.writeFileSync(args.sidecar, result.sidecar);
      console.error(`wrote ${args.sidecar}`);
    }
    for (const warning of result.warnings) {
      console.error(`warning: ${warning}`);
    }
  } catch (err) {
    if (err instanceof ExportError) {
      console.error(`export: error: ${err.message}`);
      process.exit(1);
    }
    throw err;
  }
}

main();
