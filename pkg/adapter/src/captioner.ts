/**
 * Caption synthesis for image-only queries.
 *
 * The built-in captioner derives a short deterministic description from
 * image statistics — enough to drive the generator reproducibly offline.
 * Production audits should supply a caption hook backed by a real
 * captioning model (fine-tuned on the auxiliary data where possible);
 * `http(s)://...` POSTs the image and expects a UTF-8 caption back.
 */

import * as http from 'http';
import * as https from 'https';

import { RgbImage, encodePpm, resize } from './image';
import { SplitMix64, deriveSeed } from './rng';

export type CaptionHook = (image: RgbImage) => Promise<string>;

const SUBJECTS = ['portrait', 'landscape', 'still life', 'street scene', 'interior', 'abstract piece'];
const TONES = ['dim', 'muted', 'balanced', 'bright', 'vivid'];
const PALETTES = ['red-leaning', 'green-leaning', 'blue-leaning', 'neutral'];

export function builtinCaptioner(seed: number): CaptionHook {
  return async (image: RgbImage) => {
    const small = resize(image, 8, 8);
    let sum = 0;
    const channel = [0, 0, 0];
    for (let i = 0; i < small.pixels.length; i++) {
      sum += small.pixels[i];
      channel[i % 3] += small.pixels[i];
    }
    const mean = sum / small.pixels.length;
    const tone = TONES[Math.min(TONES.length - 1, Math.floor((mean / 256) * TONES.length))];
    const maxChannel = channel.indexOf(Math.max(...channel));
    const spread = Math.max(...channel) - Math.min(...channel);
    const palette = spread < small.pixels.length / 3 ? PALETTES[3] : PALETTES[maxChannel];
    const rng = new SplitMix64(deriveSeed(seed, Buffer.from(small.pixels).toString('hex')));
    const subject = SUBJECTS[rng.nextInt(SUBJECTS.length)];
    return `a ${tone} ${palette} ${subject}`;
  };
}

export function httpCaptioner(endpoint: string, timeoutMs = 60_000): CaptionHook {
  return (image: RgbImage) => {
    const body = encodePpm(image);
    const url = new URL(endpoint);
    const client = url.protocol === 'https:' ? https : http;
    return new Promise((resolve, reject) => {
      const request = client.request(
        url,
        {
          method: 'POST',
          headers: { 'content-type': 'image/x-portable-pixmap', 'content-length': body.length },
          timeout: timeoutMs,
        },
        (res) => {
          const chunks: Buffer[] = [];
          res.on('data', (chunk) => chunks.push(chunk));
          res.on('end', () => {
            if (res.statusCode !== 200) {
              reject(new Error(`captioner returned status ${res.statusCode}`));
              return;
            }
            const text = Buffer.concat(chunks).toString('utf-8').trim();
            if (!text) {
              reject(new Error('captioner returned an empty caption'));
              return;
            }
            resolve(text);
          });
        }
      );
      request.on('timeout', () => {
        request.destroy(new Error(`captioner timed out after ${timeoutMs}ms`));
      });
      request.on('error', reject);
      request.end(body);
    });
  };
}

export function makeCaptioner(name: string, seed: number): CaptionHook {
  if (name === 'builtin' || name === 'default') return builtinCaptioner(seed);
  if (name.startsWith('http://') || name.startsWith('https://')) return httpCaptioner(name);
  throw new Error(
    `unknown captioner ${JSON.stringify(name)}; use "builtin" or an http(s) endpoint`
  );
}
