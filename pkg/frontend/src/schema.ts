/**
 * nn2c model document (schema version 1) and exporter result types.
 */

export interface TensorPayload {
  shape: number[];
  data: number[];
}

export interface WeightsEntry {
  kernel: TensorPayload;
  bias: TensorPayload;
}

export interface LayerRecord {
  id: string;
  type: string;
  inputs: string[];
  weights_key?: string;
  [hyperparam: string]: unknown;
}

export interface ModelDocument {
  format_version: 1;
  name: string;
  input: { shape: number[] };
  layers: LayerRecord[];
  output: string;
  weights?: Record<string, WeightsEntry>;
}

export const INPUT_ID = "__input__";

export const SUPPORTED_ACTIVATIONS = new Set([
  "linear",
  "relu",
  "sigmoid",
  "tanh",
  "softmax",
]);

export interface ExportResult {
  /** Serialised schema-version-1 document. */
  document: string;
  /** NNWB bytes when sidecar output was requested. */
  sidecar?: Buffer;
  warnings: string[];
}

export class ExportError extends Error {}

/** A layer class or hyperparameter setting nn2c cannot represent. */
export class UnsupportedLayerError extends ExportError {}

/** An activation function outside nn2c's five supported ones. */
export class ActivationError extends ExportError {}
