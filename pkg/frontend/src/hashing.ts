/**
 * SHA-256 proof-of-work primitives, byte-compatible with the server.
 *
 * Preimage convention: lowercase-hex salt (32 chars) immediately followed
 * by the decimal nonce, UTF-8 bytes, no separator. The shared
 * pow_vectors.json fixture pins this encoding bit-exactly on both sides.
 *
 * Hashing prefers the platform's WebCrypto digest; a pure implementation
 * serves as fallback for contexts without crypto.subtle.
 */

const encoder = new TextEncoder();

export function powPreimage(saltHex: string, nonce: number): Uint8Array {
  if (!Number.isSafeInteger(nonce) || nonce < 0) {
    throw new RangeError(`nonce must be a non-negative safe integer: ${nonce}`);
  }
  return encoder.encode(saltHex.toLowerCase() + String(nonce));
}

export function leadingZeroBits(digest: Uint8Array): number {
  let bits = 0;
  for (const byte of digest) {
    if (byte === 0) {
      bits += 8;
    } else {
      bits += Math.clz32(byte) - 24;
      break;
    }
  }
  return bits;
}

export function toHex(bytes: Uint8Array): string {
  let out = "";
  for (const b of bytes) out += b.toString(16).padStart(2, "0");
  return out;
}

// ---------------------------------------------------------------------------
// Pure SHA-256 fallback (FIPS 180-4), used when crypto.subtle is missing.

const K = new Uint32Array([
  0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
  0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
  0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
  0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
  0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
  0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
  0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
  0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
  0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
  0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
  0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2,
]);

const scratch = new Uint32Array(64);

export function sha256Sync(message: Uint8Array): Uint8Array {
  const bitLength = message.length * 8;
  const paddedLength = ((message.length + 8) >> 6 << 6) + 64;
  const padded = new Uint8Array(paddedLength);
  padded.set(message);
  padded[message.length] = 0x80;
  const view = new DataView(padded.buffer);
  view.setUint32(paddedLength - 4, bitLength >>> 0);
  view.setUint32(paddedLength - 8, Math.floor(bitLength / 0x100000000));

  let h0 = 0x6a09e667, h1 = 0xbb67ae85, h2 = 0x3c6ef372, h3 = 0xa54ff53a;
  let h4 = 0x510e527f, h5 = 0x9b05688c, h6 = 0x1f83d9ab, h7 = 0x5be0cd19;

  const w = scratch;
  for (let offset = 0; offset < paddedLength; offset += 64) {
    for (let i = 0; i < 16; i++) w[i] = view.getUint32(offset + i * 4);
    for (let i = 16; i < 64; i++) {
      const a = w[i - 15]!, b = w[i - 2]!;
      const s0 = ((a >>> 7) | (a << 25)) ^ ((a >>> 18) | (a << 14)) ^ (a >>> 3);
      const s1 = ((b >>> 17) | (b << 15)) ^ ((b >>> 19) | (b << 13)) ^ (b >>> 10);
      w[i] = (w[i - 16]! + s0 + w[i - 7]! + s1) >>> 0;
    }
    let a = h0, b = h1, c = h2, d = h3, e = h4, f = h5, g = h6, h = h7;
    for (let i = 0; i < 64; i++) {
      const S1 = ((e >>> 6) | (e << 26)) ^ ((e >>> 11) | (e << 21)) ^ ((e >>> 25) | (e << 7));
      const ch = (e & f) ^ (~e & g);
      const t1 = (h + S1 + ch + K[i]! + w[i]!) >>> 0;
      const S0 = ((a >>> 2) | (a << 30)) ^ ((a >>> 13) | (a << 19)) ^ ((a >>> 22) | (a << 10));
      const maj = (a & b) ^ (a & c) ^ (b & c);
      const t2 = (S0 + maj) >>> 0;
      h = g; g = f; f = e; e = (d + t1) >>> 0;
      d = c; c = b; b = a; a = (t1 + t2) >>> 0;
    }
    h0 = (h0 + a) >>> 0; h1 = (h1 + b) >>> 0; h2 = (h2 + c) >>> 0; h3 = (h3 + d) >>> 0;
    h4 = (h4 + e) >>> 0; h5 = (h5 + f) >>> 0; h6 = (h6 + g) >>> 0; h7 = (h7 + h) >>> 0;
  }

  const out = new Uint8Array(32);
  const outView = new DataView(out.buffer);
  [h0, h1, h2, h3, h4, h5, h6, h7].forEach((word, i) => outView.setUint32(i * 4, word));
  return out;
}

function subtleCrypto(): SubtleCrypto | null {
  const c = (globalThis as { crypto?: Crypto }).crypto;
  return c && c.subtle ? c.subtle : null;
}

export async function sha256(message: Uint8Array): Promise<Uint8Array> {
  const subtle = subtleCrypto();
  if (subtle) {
    const buffer = await subtle.digest(
      "SHA-256",
      message.buffer.slice(message.byteOffset, message.byteOffset + message.byteLength) as ArrayBuffer,
    );
    return new Uint8Array(buffer);
  }
  return sha256Sync(message);
}

export async function powDigest(saltHex: string, nonce: number): Promise<Uint8Array> {
  return sha256(powPreimage(saltHex, nonce));
}

export async function meetsDifficulty(
  saltHex: string,
  nonce: number,
  difficultyBits: number,
): Promise<boolean> {
  return leadingZeroBits(await powDigest(saltHex, nonce)) >= difficultyBits;
}

export interface SolveOptions {
  saltHex: string;
  difficultyBits: number;
  startNonce: number;
  stride: number;
  /** Called every `progressEvery` attempts with the running total. */
  onProgress?: (tried: number) => void;
  progressEvery?: number;
}

/** Scan nonces startNonce, startNonce+stride, ... until one meets the
 * difficulty. Returns the found nonce; never skips a candidate.
 *
 * The hot loop uses the pure hasher: awaiting crypto.subtle per nonce
 * costs ~6x in promise overhead, and the fixture pins both paths to the
 * same bits anyway. The loop yields to the event loop at each progress
 * step so a host running it outside a worker stays responsive. */
export async function solvePow(options: SolveOptions): Promise<number> {
  const { saltHex, difficultyBits, startNonce, stride } = options;
  const progressEvery = options.progressEvery ?? 4096;
  if (stride < 1 || startNonce < 0) {
    throw new RangeError("startNonce must be >= 0 and stride >= 1");
  }
  let tried = 0;
  for (let nonce = startNonce; ; nonce += stride) {
    const digest = sha256Sync(powPreimage(saltHex, nonce));
    if (leadingZeroBits(digest) >= difficultyBits) {
      return nonce;
    }
    tried += 1;
    if (tried % progressEvery === 0) {
      options.onProgress?.(tried);
      await new Promise((resolve) => setTimeout(resolve, 0));
    }
  }
}
