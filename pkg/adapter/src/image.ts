/**
 * Minimal image handling: RGB rasters with PPM (P6) decode/encode and a
 * deterministic bilinear resize. PPM keeps the adapter hermetic; plug other
 * decoders into decodeImage for richer formats.
 */

export interface RgbImage {
  width: number;
  height: number;
  /** Row-major RGB bytes, 3 per pixel. */
  pixels: Uint8Array;
}

export class DecodeError extends Error {}

export function decodeImage(data: Buffer): RgbImage {
  if (data.length >= 2 && data[0] === 0x50 && data[1] === 0x36) {
    return decodePpm(data);
  }
  throw new DecodeError('unsupported image format (expected binary PPM "P6")');
}

function decodePpm(data: Buffer): RgbImage {
  // header: "P6" <ws> width <ws> height <ws> maxval <single ws> pixel data
  let pos = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    while (pos < data.length && isSpace(data[pos])) {
      pos++;
      if (data[pos - 1] === 0x23) {
        // comment runs to end of line
        while (pos < data.length && data[pos] !== 0x0a) pos++;
      }
    }
    if (pos < data.length && data[pos] === 0x23) {
      while (pos < data.length && data[pos] !== 0x0a) pos++;
      continue;
    }
    let start = pos;
    while (pos < data.length && !isSpace(data[pos])) pos++;
    if (start === pos) throw new DecodeError('truncated PPM header');
    const value = Number(data.subarray(start, pos).toString('ascii'));
    if (!Number.isInteger(value) || value <= 0) {
      throw new DecodeError('malformed PPM header field');
    }
    fields.push(value);
  }
  pos++; // single whitespace after maxval
  const [width, height, maxval] = fields;
  if (maxval !== 255) throw new DecodeError(`unsupported PPM maxval ${maxval}`);
  const needed = width * height * 3;
  if (data.length - pos < needed) {
    throw new DecodeError(
      `truncated PPM pixel data: need ${needed} bytes, have ${data.length - pos}`
    );
  }
  return { width, height, pixels: new Uint8Array(data.subarray(pos, pos + needed)) };
}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d;
}

export function encodePpm(image: RgbImage): Buffer {
  const header = Buffer.from(`P6\n${image.width} ${image.height}\n255\n`, 'ascii');
  return Buffer.concat([header, Buffer.from(image.pixels)]);
}

/** Bilinear resize; deterministic float math, identical on every platform. */
export function resize(image: RgbImage, width: number, height: number): RgbImage {
  if (image.width === width && image.height === height) return image;
  const out = new Uint8Array(width * height * 3);
  const xRatio = image.width / width;
  const yRatio = image.height / height;
  for (let y = 0; y < height; y++) {
    const srcY = Math.min((y + 0.5) * yRatio - 0.5, image.height - 1);
    const y0 = Math.max(0, Math.floor(srcY));
    const y1 = Math.min(image.height - 1, y0 + 1);
    const fy = srcY - y0;
    for (let x = 0; x < width; x++) {
      const srcX = Math.min((x + 0.5) * xRatio - 0.5, image.width - 1);
      const x0 = Math.max(0, Math.floor(srcX));
      const x1 = Math.min(image.width - 1, x0 + 1);
      const fx = srcX - x0;
      for (let c = 0; c < 3; c++) {
        const p00 = image.pixels[(y0 * image.width + x0) * 3 + c];
        const p01 = image.pixels[(y0 * image.width + x1) * 3 + c];
        const p10 = image.pixels[(y1 * image.width + x0) * 3 + c];
        const p11 = image.pixels[(y1 * image.width + x1) * 3 + c];
        const top = p00 + (p01 - p00) * fx;
        const bottom = p10 + (p11 - p10) * fx;
        out[(y * width + x) * 3 + c] = Math.round(top + (bottom - top) * fy);
      }
    }
  }
  return { width, height, pixels: out };
}
