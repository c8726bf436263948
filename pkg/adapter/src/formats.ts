/**
 * Embedding-store file writers.
 *
 * JSONL: one object per line with fields id, scenario, text_available,
 * label, query (k x d), generated (m x k x d).
 *
 * Binary: magic "MIAE"; little-endian u32 version=1, k, d, m, record_count;
 * per record: u16 id length, UTF-8 id bytes, u8 label (0/1/255=absent),
 * u8 text_available, then (1+m)*k*d little-endian f32 values, query matrix
 * first, generated matrices in order.
 */

import * as fs from 'fs';

export interface EmbeddingRecord {
  id: string;
  /** k rows of d float32 features. */
  query: Float32Array[];
  /** m matrices, each k rows of d float32 features. */
  generated: Float32Array[][];
  label: 0 | 1 | null;
  textAvailable: boolean;
  scenario: string;
}

export type FileFormat = 'jsonl' | 'binary';

const MAGIC = Buffer.from('MIAE', 'ascii');
const VERSION = 1;

export function recordGeometry(records: EmbeddingRecord[]): { k: number; d: number; m: number } {
  if (records.length === 0) throw new Error('no records to save');
  const k = records[0].query.length;
  const d = records[0].query[0].length;
  const m = records[0].generated.length;
  for (const rec of records) {
    const shapes = [rec.query, ...rec.generated];
    if (rec.generated.length !== m) {
      throw new Error(`record ${rec.id}: m=${rec.generated.length} differs from file m=${m}`);
    }
    for (const matrix of shapes) {
      if (matrix.length !== k || matrix.some((row) => row.length !== d)) {
        throw new Error(`record ${rec.id}: embedding shape differs from file shape (${k}, ${d})`);
      }
      for (const row of matrix) {
        for (const v of row) {
          if (!Number.isFinite(v)) {
            throw new Error(`record ${rec.id}: embedding contains a non-finite value`);
          }
        }
      }
    }
  }
  return { k, d, m };
}

export function saveRecords(records: EmbeddingRecord[], path: string, format: FileFormat): void {
  recordGeometry(records);
  if (format === 'jsonl') {
    fs.writeFileSync(path, records.map(recordToJsonLine).join(''));
  } else if (format === 'binary') {
    fs.writeFileSync(path, recordsToBinary(records));
  } else {
    throw new Error(`unknown format ${JSON.stringify(format)}`);
  }
}

function recordToJsonLine(rec: EmbeddingRecord): string {
  const obj = {
    id: rec.id,
    scenario: rec.scenario,
    text_available: rec.textAvailable,
    label: rec.label,
    query: rec.query.map((row) => Array.from(row)),
    generated: rec.generated.map((matrix) => matrix.map((row) => Array.from(row))),
  };
  return JSON.stringify(obj) + '\n';
}

function recordsToBinary(records: EmbeddingRecord[]): Buffer {
  const { k, d, m } = recordGeometry(records);
  const chunks: Buffer[] = [];
  const header = Buffer.alloc(4 + 5 * 4);
  MAGIC.copy(header, 0);
  header.writeUInt32LE(VERSION, 4);
  header.writeUInt32LE(k, 8);
  header.writeUInt32LE(d, 12);
  header.writeUInt32LE(m, 16);
  header.writeUInt32LE(records.length, 20);
  chunks.push(header);
  for (const rec of records) {
    const idBytes = Buffer.from(rec.id, 'utf-8');
    if (idBytes.length > 0xffff) throw new Error(`record id too long: ${rec.id.slice(0, 32)}...`);
    const pre = Buffer.alloc(2 + idBytes.length + 2);
    pre.writeUInt16LE(idBytes.length, 0);
    idBytes.copy(pre, 2);
    pre.writeUInt8(rec.label === null ? 255 : rec.label, 2 + idBytes.length);
    pre.writeUInt8(rec.textAvailable ? 1 : 0, 2 + idBytes.length + 1);
    chunks.push(pre);
    const values = Buffer.alloc((1 + m) * k * d * 4);
    let off = 0;
    for (const matrix of [rec.query, ...rec.generated]) {
      for (const row of matrix) {
        for (const v of row) {
          values.writeFloatLE(v, off);
          off += 4;
        }
      }
    }
    chunks.push(values);
  }
  return Buffer.concat(chunks);
}
