/**
 * Generator access: a text-to-image backend queried once per repeat.
 *
 * Two backends ship here. `local` is a deterministic procedural synthesizer
 * (prompt + seed -> smooth RGB field) that exercises the full pipeline
 * offline. `http(s)://...` POSTs {prompt, seed, steps, resolution} as JSON
 * and expects binary PPM image bytes back, which is how fine-tuned
 * checkpoints behind a serving endpoint are audited.
 */

import * as http from 'http';
import * as https from 'https';

import { RgbImage, decodeImage } from './image';
import { SplitMix64, deriveSeed } from './rng';

export interface GeneratorRequest {
  prompt: string;
  seed: number;
  steps: number;
  resolution: number;
}

export interface Generator {
  readonly name: string;
  generate(req: GeneratorRequest): Promise<RgbImage>;
}

export class LocalGenerator implements Generator {
  readonly name = 'local';

  async generate(req: GeneratorRequest): Promise<RgbImage> {
    const side = req.resolution;
    const rng = new SplitMix64(deriveSeed(req.seed, req.prompt, req.steps));
    // sum of a few random low-frequency waves per channel: smooth, seeded,
    // prompt-dependent content standing in for a denoised sample
    const waves = 4;
    const params: number[][] = [];
    for (let c = 0; c < 3; c++) {
      for (let w = 0; w < waves; w++) {
        params.push([
          rng.nextFloat() * 4 * Math.PI / side,
          rng.nextFloat() * 4 * Math.PI / side,
          rng.nextFloat() * 2 * Math.PI,
          0.5 + rng.nextFloat(),
        ]);
      }
    }
    const pixels = new Uint8Array(side * side * 3);
    for (let y = 0; y < side; y++) {
      for (let x = 0; x < side; x++) {
        for (let c = 0; c < 3; c++) {
          let v = 0;
          let norm = 0;
          for (let w = 0; w < waves; w++) {
            const [fx, fy, phase, amp] = params[c * waves + w];
            v += amp * Math.sin(fx * x + fy * y + phase);
            norm += amp;
          }
          pixels[(y * side + x) * 3 + c] = Math.round(((v / norm) * 0.5 + 0.5) * 255);
        }
      }
    }
    return { width: side, height: side, pixels };
  }
}

export class HttpGenerator implements Generator {
  readonly name: string;

  constructor(private readonly endpoint: string, private readonly timeoutMs = 60_000) {
    this.name = endpoint;
  }

  generate(req: GeneratorRequest): Promise<RgbImage> {
    const body = JSON.stringify(req);
    const url = new URL(this.endpoint);
    const client = url.protocol === 'https:' ? https : http;
    return new Promise((resolve, reject) => {
      const request = client.request(
        url,
        {
          method: 'POST',
          headers: { 'content-type': 'application/json', 'content-length': Buffer.byteLength(body) },
          timeout: this.timeoutMs,
        },
        (res) => {
          const chunks: Buffer[] = [];
          res.on('data', (chunk) => chunks.push(chunk));
          res.on('end', () => {
            if (res.statusCode !== 200) {
              reject(new Error(`generator returned status ${res.statusCode}`));
              return;
            }
            try {
              resolve(decodeImage(Buffer.concat(chunks)));
            } catch (err) {
              reject(err);
            }
          });
        }
      );
      request.on('timeout', () => {
        request.destroy(new Error(`generator timed out after ${this.timeoutMs}ms`));
      });
      request.on('error', reject);
      request.end(body);
    });
  }
}

export function makeGenerator(ref: string): Generator {
  if (ref === 'local') return new LocalGenerator();
  if (ref.startsWith('http://') || ref.startsWith('https://')) return new HttpGenerator(ref);
  throw new Error(
    `unknown generator ${JSON.stringify(ref)}; use "local" or an http(s) endpoint`
  );
}
