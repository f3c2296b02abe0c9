/**
 * Writer for the NNWB binary weight sidecar.
 *
 * Layout (little-endian): magic "NNWB", version u16, tensor count u32;
 * per tensor: key length u16, key bytes, rank u8, rank x dim u32, then
 * the float32 values.
 */

export interface SidecarTensor {
  key: string;
  shape: number[];
  values: Float32Array;
}

const MAGIC = Buffer.from("NNWB", "ascii");
const VERSION = 1;

export function writeSidecar(tensors: SidecarTensor[]): Buffer {
  const chunks: Buffer[] = [];
  const header = Buffer.alloc(MAGIC.length + 2 + 4);
  MAGIC.copy(header, 0);
  header.writeUInt16LE(VERSION, 4);
  header.writeUInt32LE(tensors.length, 6);
  chunks.push(header);

  for (const tensor of tensors) {
    const key = Buffer.from(tensor.key, "utf-8");
    const meta = Buffer.alloc(2 + key.length + 1 + 4 * tensor.shape.length);
    let offset = 0;
    offset = meta.writeUInt16LE(key.length, offset);
    offset += key.copy(meta, offset);
    offset = meta.writeUInt8(tensor.shape.length, offset);
    for (const dim of tensor.shape) {
      offset = meta.writeUInt32LE(dim, offset);
    }
    chunks.push(meta);

    const values = Buffer.alloc(4 * tensor.values.length);
    for (let i = 0; i < tensor.values.length; i++) {
      values.writeFloatLE(tensor.values[i], 4 * i);
    }
    chunks.push(values);
  }
  return Buffer.concat(chunks);
}
