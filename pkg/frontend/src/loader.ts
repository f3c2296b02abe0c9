/**
 * Reader for TensorFlow.js layers-model artifacts on disk:
 * a model.json with topology plus a weights manifest pointing at binary
 * shard files. No tfjs dependency; everything is plain JSON and bytes.
 */

import * as fs from "fs";
import * as path from "path";

import { ExportError } from "./schema.js";

export interface WeightSpec {
  name: string;
  shape: number[];
  dtype: string;
}

export interface LayersModelArtifacts {
  topology: any;
  weightSpecs: WeightSpec[];
  weightData: Buffer;
}

function resolveModelJson(modelPath: string): string {
  const stats = fs.statSync(modelPath);
  if (stats.isDirectory()) {
    const candidate = path.join(modelPath, "model.json");
    if (!fs.existsSync(candidate)) {
      throw new ExportError(`no model.json inside ${modelPath}`);
    }
    return candidate;
  }
  return modelPath;
}

export function loadLayersModel(modelPath: string): LayersModelArtifacts {
  const jsonPath = resolveModelJson(modelPath);
  let parsed: any;
  try {
    parsed = JSON.parse(fs.readFileSync(jsonPath, "utf-8"));
  } catch (err) {
    throw new ExportError(`${jsonPath} is not valid JSON: ${err}`);
  }
  const topology = parsed.modelTopology;
  if (!topology) {
    throw new ExportError(`${jsonPath} has no modelTopology; ` +
      "only TensorFlow.js layers-model files are supported");
  }

  const weightSpecs: WeightSpec[] = [];
  const shards: Buffer[] = [];
  const baseDir = path.dirname(jsonPath);
  for (const group of parsed.weightsManifest ?? []) {
    for (const shard of group.paths) {
      shards.push(fs.readFileSync(path.join(baseDir, shard)));
    }
    weightSpecs.push(...group.weights);
  }
  return { topology, weightSpecs, weightData: Buffer.concat(shards) };
}

/** Slice the concatenated weight payload into per-tensor float32 views. */
export function sliceWeights(
  specs: WeightSpec[],
  data: Buffer,
): Map<string, { shape: number[]; values: Float32Array }> {
  const out = new Map<string, { shape: number[]; values: Float32Array }>();
  let offset = 0;
  for (const spec of specs) {
    if (spec.dtype !== "float32") {
      throw new ExportError(
        `weight ${spec.name} has dtype ${spec.dtype}; only float32 models ` +
        "are supported");
    }
    const count = spec.shape.reduce((a, b) => a * b, 1);
    const bytes = 4 * count;
    if (offset + bytes > data.length) {
      throw new ExportError(
        `weight payload truncated at ${spec.name} ` +
        `(need ${bytes} bytes at offset ${offset}, have ${data.length - offset})`);
    }
    // copy out of the Buffer so the view is aligned and independent
    const values = new Float32Array(count);
    for (let i = 0; i < count; i++) {
      values[i] = data.readFloatLE(offset + 4 * i);
    }
    out.set(spec.name, { shape: spec.shape, values });
    offset += bytes;
  }
  return out;
}
