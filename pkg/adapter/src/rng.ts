/**
 * Deterministic PRNG utilities. Everything downstream (generated images,
 * captions) must be reproducible from (seed, prompt), so all randomness
 * flows through splitmix64 over BigInt — stable across platforms.
 */

const MASK64 = (1n << 64n) - 1n;

export function hashString(text: string): bigint {
  // FNV-1a over UTF-8 bytes, 64-bit
  let h = 0xcbf29ce484222325n;
  const bytes = Buffer.from(text, 'utf-8');
  for (const b of bytes) {
    h ^= BigInt(b);
    h = (h * 0x100000001b3n) & MASK64;
  }
  return h;
}

export class SplitMix64 {
  private state: bigint;

  constructor(seed: bigint | number) {
    this.state = BigInt(seed) & MASK64;
  }

  nextU64(): bigint {
    this.state = (this.state + 0x9e3779b97f4a7c15n) & MASK64;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
    return z ^ (z >> 31n);
  }

  /** Uniform float in [0, 1) with 53 bits of precision. */
  nextFloat(): number {
    return Number(this.nextU64() >> 11n) / 2 ** 53;
  }

  /** Uniform integer in [0, bound). */
  nextInt(bound: number): number {
    return Math.floor(this.nextFloat() * bound);
  }
}

export function deriveSeed(base: bigint | number, ...parts: (string | number)[]): bigint {
  let h = BigInt(base) & MASK64;
  for (const part of parts) {
    const ph = typeof part === 'string' ? hashString(part) : BigInt(part) & MASK64;
    h = ((h ^ ph) * 0x100000001b3n) & MASK64;
  }
  return h;
}
