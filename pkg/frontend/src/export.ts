/**
 * Convert TensorFlow.js layers-model artifacts into an nn2c model document.
 *
 * Layer ids are preserved from the source model, implicit framework
 * defaults (stride 1, pool stride = pool size, linear activation) are
 * folded into explicit schema fields, and weight values are carried over
 * bit-exactly from the float32 shard bytes.
 */

import { loadLayersModel, sliceWeights, LayersModelArtifacts } from "./loader.js";
import {
  ActivationError,
  ExportError,
  ExportResult,
  INPUT_ID,
  LayerRecord,
  ModelDocument,
  SUPPORTED_ACTIVATIONS,
  TensorPayload,
  UnsupportedLayerError,
  WeightsEntry,
} from "./schema.js";
import { writeSidecar, SidecarTensor } from "./sidecar.js";

interface KerasLayer {
  class_name: string;
  config: any;
  inbound_nodes?: any[];
  name?: string;
}

interface ChainEntry {
  name: string;
  classname: string;
  config: any;
  inputs: string[];
}

function layerName(layer: KerasLayer): string {
  return layer.config?.name ?? layer.name ?? "";
}

function checkActivation(config: any, name: string): string {
  const activation = config.activation ?? "linear";
  if (!SUPPORTED_ACTIVATIONS.has(activation)) {
    throw new ActivationError(
      `layer '${name}' uses unsupported activation '${activation}'`);
  }
  return activation;
}

function checkChannelsLast(config: any, name: string) {
  const format = config.data_format;
  if (format !== undefined && format !== null && format !== "channels_last") {
    throw new UnsupportedLayerError(
      `layer '${name}' uses data_format '${format}'; only channels_last ` +
      "is supported");
  }
}

function checkNoDilation(config: any, name: string) {
  const rates: number[] = config.dilation_rate ?? [];
  if (rates.some((r) => r !== 1)) {
    throw new UnsupportedLayerError(
      `layer '${name}' uses dilation; nn2c convolutions are dense taps`);
  }
}

function asPair(value: any): [number, number] {
  if (Array.isArray(value)) {
    return value.length === 1 ? [value[0], value[0]] : [value[0], value[1]];
  }
  return [value, value];
}

/** One exported layer record, or null when the layer only marks the input. */
function convertLayer(entry: ChainEntry): LayerRecord | null {
  const { name, classname, config, inputs } = entry;
  switch (classname) {
    case "InputLayer":
      return null;
    case "Dense":
      return {
        id: name, type: "dense", inputs,
        units: config.units,
        activation: checkActivation(config, name),
      };
    case "Conv1D": {
      checkChannelsLast(config, name);
      checkNoDilation(config, name);
      const [kernel] = asPair(config.kernel_size);
      const [stride] = asPair(config.strides ?? 1);
      return {
        id: name, type: "conv1d", inputs,
        filters: config.filters,
        kernel_size: kernel,
        stride,
        padding: config.padding ?? "valid",
        activation: checkActivation(config, name),
      };
    }
    case "Conv2D": {
      checkChannelsLast(config, name);
      checkNoDilation(config, name);
      const [kh, kw] = asPair(config.kernel_size);
      const [sh, sw] = asPair(config.strides ?? 1);
      return {
        id: name, type: "conv2d", inputs,
        filters: config.filters,
        kernel_h: kh, kernel_w: kw,
        stride_h: sh, stride_w: sw,
        padding: config.padding ?? "valid",
        activation: checkActivation(config, name),
      };
    }
    case "MaxPooling1D": {
      if ((config.padding ?? "valid") !== "valid") {
        throw new UnsupportedLayerError(
          `layer '${name}': padded pooling is not supported`);
      }
      const [pool] = asPair(config.pool_size ?? 2);
      const [stride] = asPair(config.strides ?? pool);
      return { id: name, type: "maxpool1d", inputs,
               pool_size: pool, stride };
    }
    case "MaxPooling2D": {
      if ((config.padding ?? "valid") !== "valid") {
        throw new UnsupportedLayerError(
          `layer '${name}': padded pooling is not supported`);
      }
      const [ph, pw] = asPair(config.pool_size ?? 2);
      const [sh, sw] = asPair(config.strides ?? [ph, pw]);
      return { id: name, type: "maxpool2d", inputs,
               pool_h: ph, pool_w: pw, stride_h: sh, stride_w: sw };
    }
    case "Flatten":
      checkChannelsLast(config, name);
      return { id: name, type: "flatten", inputs };
    default:
      throw new UnsupportedLayerError(
        `layer '${name}' has unsupported type '${classname}'`);
  }
}

function inputShapeOf(config: any, name: string): number[] {
  const batchShape: (number | null)[] | undefined =
    config.batch_input_shape ?? config.batch_shape;
  if (!batchShape) {
    throw new ExportError(
      `layer '${name}' should declare the model input shape but does not`);
  }
  const dims = batchShape.slice(1);
  if (dims.some((d) => d === null || d === undefined || d <= 0)) {
    throw new ExportError(
      `model input shape ${JSON.stringify(batchShape)} has free dimensions; ` +
      "nn2c needs fixed sizes");
  }
  return dims as number[];
}

/** Flatten Sequential or single-chain Functional topologies. */
function chainOf(topology: any): { entries: ChainEntry[]; output: string;
                                   inputShape: number[] } {
  const root = topology.model_config ?? topology;
  const classname = root.class_name;
  const config = root.config;
  const layers: KerasLayer[] = config?.layers ?? [];
  if (!layers.length) {
    throw new ExportError("model topology contains no layers");
  }

  if (classname === "Sequential") {
    const entries: ChainEntry[] = [];
    let previous = INPUT_ID;
    let inputShape: number[] | null = null;
    for (const layer of layers) {
      const name = layerName(layer);
      if (inputShape === null) {
        inputShape = inputShapeOf(layer.config, name);
      }
      if (layer.class_name === "InputLayer") {
        continue;
      }
      entries.push({ name, classname: layer.class_name,
                     config: layer.config, inputs: [previous] });
      previous = name;
    }
    if (inputShape === null || !entries.length) {
      throw new ExportError("sequential model has no computational layers");
    }
    return { entries, output: entries[entries.length - 1].name, inputShape };
  }

  if (classname === "Model" || classname === "Functional") {
    const inputNames = new Set<string>(
      (config.input_layers ?? []).map((ref: any[]) => ref[0]));
    if (inputNames.size !== 1) {
      throw new ExportError("only single-input models are supported");
    }
    let inputShape: number[] | null = null;
    const entries: ChainEntry[] = [];
    for (const layer of layers) {
      const name = layerName(layer);
      if (layer.class_name === "InputLayer" || inputNames.has(name)) {
        inputShape = inputShapeOf(layer.config, name);
        continue;
      }
      const nodes = layer.inbound_nodes ?? [];
      const refs: string[] = (nodes[0] ?? []).map((ref: any[]) => ref[0]);
      const inputs = refs.map((ref) => inputNames.has(ref) ? INPUT_ID : ref);
      entries.push({ name, classname: layer.class_name,
                     config: layer.config, inputs });
    }
    if (inputShape === null) {
      throw new ExportError("functional model lacks an input layer");
    }
    const outputs = (config.output_layers ?? []).map((ref: any[]) => ref[0]);
    if (outputs.length !== 1) {
      throw new ExportError("only single-output models are supported");
    }
    return { entries, output: outputs[0], inputShape };
  }

  throw new ExportError(
    `unsupported model topology class '${classname}'`);
}

const WEIGHTED_TYPES = new Set(["dense", "conv1d", "conv2d"]);

export function exportArtifacts(artifacts: LayersModelArtifacts,
                                options: { sidecar?: boolean } = {},
                                ): ExportResult {
  const warnings: string[] = [];
  const { entries, output, inputShape } = chainOf(artifacts.topology);
  const tensors = sliceWeights(artifacts.weightSpecs, artifacts.weightData);

  const records: LayerRecord[] = [];
  const inlineWeights: Record<string, WeightsEntry> = {};
  const sidecarTensors: SidecarTensor[] = [];

  for (const entry of entries) {
    const record = convertLayer(entry);
    if (record === null) {
      continue;
    }
    if (WEIGHTED_TYPES.has(record.type)) {
      const kernel = tensors.get(`${entry.name}/kernel`);
      if (!kernel) {
        throw new ExportError(
          `model carries no kernel tensor for layer '${entry.name}'`);
      }
      let bias = tensors.get(`${entry.name}/bias`);
      if (!bias) {
        const units = kernel.shape[kernel.shape.length - 1];
        bias = { shape: [units], values: new Float32Array(units) };
        warnings.push(
          `layer '${entry.name}' has no bias; exported a zero bias`);
      }
      record.weights_key = entry.name;
      if (options.sidecar) {
        sidecarTensors.push({ key: `${entry.name}.kernel`,
                              shape: kernel.shape, values: kernel.values });
        sidecarTensors.push({ key: `${entry.name}.bias`,
                              shape: bias.shape, values: bias.values });
      } else {
        inlineWeights[entry.name] = {
          kernel: toPayload(kernel),
          bias: toPayload(bias),
        };
      }
    }
    records.push(record);
  }

  const name = (artifacts.topology.model_config ?? artifacts.topology)
    .config?.name ?? "exported_model";
  const document: ModelDocument = {
    format_version: 1,
    name,
    input: { shape: inputShape },
    layers: records,
    output,
  };
  if (!options.sidecar) {
    document.weights = inlineWeights;
  }
  return {
    document: JSON.stringify(document, null, 2) + "\n",
    sidecar: options.sidecar ? writeSidecar(sidecarTensors) : undefined,
    warnings,
  };
}

function toPayload(tensor: { shape: number[]; values: Float32Array },
                   ): TensorPayload {
  return { shape: tensor.shape, data: Array.from(tensor.values) };
}

export function exportModel(modelPath: string,
                            options: { sidecar?: boolean } = {},
                            ): ExportResult {
  return exportArtifacts(loadLayersModel(modelPath), options);
}
