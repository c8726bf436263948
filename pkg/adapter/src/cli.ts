#!/usr/bin/env node
/**
 * mia-extract: turn (image, text?, label?) samples into embedding-store
 * files the audit toolkit consumes.
 *
 * Usage:
 *   mia-extract --generator <local|url> --manifest <csv> --out <file>
 *               [--encoder patch16] [--captioner builtin|url] [--m 3]
 *               [--steps 30] [--resolution 512] [--format jsonl|binary]
 *               [--seed 0] [--workers 1]
 */

import * as fs from 'fs';

import { makeCaptioner } from './captioner';
import { makeEncoder } from './encoder';
import { FileFormat } from './formats';
import { makeGenerator } from './generator';
import { parseManifest } from './manifest';
import { buildAndSave } from './records';

interface CliArgs {
  generator: string;
  manifest: string;
  out: string;
  encoder: string;
  captioner: string;
  m: number;
  steps: number;
  resolution: number;
  format: FileFormat;
  seed: number;
  workers: number;
}

function parseArgs(argv: string[]): CliArgs {
  const defaults: CliArgs = {
    generator: '',
    manifest: '',
    out: '',
    encoder: 'patch16',
    captioner: 'builtin',
    m: 3,
    steps: 30,
    resolution: 512,
    format: 'jsonl',
    seed: 0,
    workers: 1,
  };
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith('--')) throw new Error(`unexpected argument ${JSON.stringify(arg)}`);
    const key = arg.slice(2).replace(/-/g, '_');
    const value = argv[++i];
    if (value === undefined) throw new Error(`missing value for ${arg}`);
    switch (key) {
      case 'generator':
      case 'manifest':
      case 'out':
      case 'encoder':
      case 'captioner':
        defaults[key] = value;
        break;
      case 'format':
        if (value !== 'jsonl' && value !== 'binary') {
          throw new Error(`--format must be jsonl or binary, got ${value}`);
        }
        defaults.format = value;
        break;
      case 'm':
      case 'steps':
      case 'resolution':
      case 'seed':
      case 'workers': {
        const parsed = Number(value);
        if (!Number.isInteger(parsed) || (key !== 'seed' && parsed < 1)) {
          throw new Error(`--${key} must be a positive integer, got ${value}`);
        }
        defaults[key] = parsed;
        break;
      }
      default:
        throw new Error(`unknown flag ${arg}`);
    }
  }
  for (const required of ['generator', 'manifest', 'out'] as const) {
    if (!defaults[required]) throw new Error(`--${required} is required`);
  }
  return defaults;
}

export async function main(argv: string[]): Promise<number> {
  let args: CliArgs;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`usage error: ${err instanceof Error ? err.message : err}`);
    return 2;
  }
  try {
    const samples = parseManifest(fs.readFileSync(args.manifest, 'utf-8'));
    const cfg = {
      generator: makeGenerator(args.generator),
      encoder: makeEncoder(args.encoder),
      captioner: makeCaptioner(args.captioner, args.seed),
      m: args.m,
      inferenceSteps: args.steps,
      resolution: args.resolution,
      seed: args.seed,
      workers: args.workers,
    };
    const outcome = await buildAndSave(samples, cfg, args.out, args.format);
    for (const failure of outcome.failures) {
      console.error(`sample ${failure.id} skipped: ${failure.reason}`);
    }
    console.log(
      `wrote ${outcome.records.length} record(s) to ${args.out}` +
        (outcome.failures.length ? ` (${outcome.failures.length} skipped)` : '')
    );
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

if (require.main === module) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
