/**
 * Patch embedding extraction.
 *
 * The built-in `patch16` encoder mirrors standard vision-transformer input
 * geometry: the image is resized to 224x224, split into a 14x14 grid of
 * 16x16 patches, and each patch's RGB content (16*16*3 = 768 values,
 * mapped to [-1, 1]) becomes that patch's feature row. The result is a
 * (196, 768) matrix per image, the same shape a ViT-class encoder emits,
 * computed deterministically with no model weights. Point `http:` encoders
 * at a real embedding service for production audits.
 */

import { RgbImage, resize } from './image';

export interface Encoder {
  readonly name: string;
  readonly patchCount: number;
  readonly featureDim: number;
  extract(image: RgbImage): Float32Array[];
}

const INPUT_SIDE = 224;
const PATCH_SIDE = 16;
const GRID = INPUT_SIDE / PATCH_SIDE; // 14

export class Patch16Encoder implements Encoder {
  readonly name = 'patch16';
  readonly patchCount = GRID * GRID; // 196
  readonly featureDim = PATCH_SIDE * PATCH_SIDE * 3; // 768

  extract(image: RgbImage): Float32Array[] {
    const scaled = resize(image, INPUT_SIDE, INPUT_SIDE);
    const rows: Float32Array[] = [];
    for (let gy = 0; gy < GRID; gy++) {
      for (let gx = 0; gx < GRID; gx++) {
        const row = new Float32Array(this.featureDim);
        let i = 0;
        for (let py = 0; py < PATCH_SIDE; py++) {
          const y = gy * PATCH_SIDE + py;
          for (let px = 0; px < PATCH_SIDE; px++) {
            const x = gx * PATCH_SIDE + px;
            const base = (y * INPUT_SIDE + x) * 3;
            for (let c = 0; c < 3; c++) {
              row[i++] = Math.fround((scaled.pixels[base + c] / 255) * 2 - 1);
            }
          }
        }
        rows.push(row);
      }
    }
    return rows;
  }
}

export function makeEncoder(name: string): Encoder {
  if (name === 'patch16' || name === 'default') {
    return new Patch16Encoder();
  }
  throw new Error(
    `unknown encoder ${JSON.stringify(name)}; built-in: patch16 (196x768 ViT geometry)`
  );
}
