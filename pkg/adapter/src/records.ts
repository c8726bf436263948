/**
 * Record assembly: for each manifest sample, caption if needed, query the
 * generator m times, extract patch embeddings of the query and every
 * generated image, and emit one embedding record.
 */

import * as fs from 'fs';

import { CaptionHook } from './captioner';
import { Encoder } from './encoder';
import { EmbeddingRecord, FileFormat, saveRecords } from './formats';
import { Generator } from './generator';
import { decodeImage } from './image';
import { ManifestRow } from './manifest';

export interface AdapterConfig {
  generator: Generator;
  encoder: Encoder;
  captioner: CaptionHook;
  /** Queries per sample. */
  m: number;
  inferenceSteps: number;
  resolution: number;
  seed: number;
  /** Samples processed concurrently; 1 (the default) is fully sequential. */
  workers?: number;
}

export interface BuildOutcome {
  records: EmbeddingRecord[];
  failures: { id: string; reason: string }[];
}

export async function buildRecords(
  samples: ManifestRow[],
  cfg: AdapterConfig
): Promise<BuildOutcome> {
  if (cfg.m < 1) throw new Error('m must be >= 1');
  if (cfg.inferenceSteps < 1) throw new Error('inference steps must be >= 1');
  const workers = Math.max(1, cfg.workers ?? 1);
  // slots keep manifest order in the output regardless of completion order
  const slots: (EmbeddingRecord | { id: string; reason: string })[] = new Array(samples.length);
  let next = 0;
  const lane = async () => {
    while (next < samples.length) {
      const index = next++;
      const sample = samples[index];
      try {
        slots[index] = await buildOne(sample, cfg);
      } catch (err) {
        slots[index] = {
          id: sample.id,
          reason: err instanceof Error ? err.message : String(err),
        };
      }
    }
  };
  await Promise.all(Array.from({ length: Math.min(workers, samples.length) }, lane));
  const records: EmbeddingRecord[] = [];
  const failures: { id: string; reason: string }[] = [];
  for (const slot of slots) {
    if ('reason' in slot) failures.push(slot);
    else records.push(slot);
  }
  return { records, failures };
}

async function buildOne(sample: ManifestRow, cfg: AdapterConfig): Promise<EmbeddingRecord> {
  const image = decodeImage(fs.readFileSync(sample.imagePath));
  const textAvailable = sample.text !== null;
  const prompt = textAvailable ? (sample.text as string) : await cfg.captioner(image);
  if (!prompt) throw new Error('empty prompt');
  const query = cfg.encoder.extract(image);
  const generated: Float32Array[][] = [];
  for (let i = 0; i < cfg.m; i++) {
    // repeat query i uses seed + i, so repeats differ but runs reproduce
    const image_i = await cfg.generator.generate({
      prompt,
      seed: cfg.seed + i,
      steps: cfg.inferenceSteps,
      resolution: cfg.resolution,
    });
    generated.push(cfg.encoder.extract(image_i));
  }
  return {
    id: sample.id,
    query,
    generated,
    label: sample.label,
    textAvailable,
    scenario: 'custom',
  };
}

export async function buildAndSave(
  samples: ManifestRow[],
  cfg: AdapterConfig,
  outPath: string,
  format: FileFormat
): Promise<BuildOutcome> {
  const outcome = await buildRecords(samples, cfg);
  if (outcome.records.length === 0) {
    throw new Error(
      `all ${samples.length} samples failed; first failure: ` +
        (outcome.failures[0] ? `${outcome.failures[0].id}: ${outcome.failures[0].reason}` : 'none')
    );
  }
  saveRecords(outcome.records, outPath, format);
  return outcome;
}
