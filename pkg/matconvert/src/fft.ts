/**
 * Complex FFT: iterative radix-2 for power-of-two lengths, Bluestein's
 * chirp-z algorithm for everything else. All transforms are in-place on
 * (re, im) Float64Array pairs; inverse transforms include the 1/N factor.
 */

export function isPowerOfTwo(n: number): boolean {
  return n > 0 && (n & (n - 1)) === 0;
}

export function nextPowerOfTwo(n: number): number {
  let m = 1;
  while (m < n) m <<= 1;
  return m;
}

/** Radix-2 Cooley-Tukey, length must be a power of two. */
function fftRadix2(re: Float64Array, im: Float64Array, invert: boolean): void {
  const n = re.length;
  // bit-reversal permutation
  for (let i = 1, j = 0; i < n; i++) {
    let bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      const tr = re[i]; re[i] = re[j]; re[j] = tr;
      const ti = im[i]; im[i] = im[j]; im[j] = ti;
    }
  }
  for (let len = 2; len <= n; len <<= 1) {
    const angle = (invert ? 2 : -2) * Math.PI / len;
    const wr = Math.cos(angle);
    const wi = Math.sin(angle);
    for (let i = 0; i < n; i += len) {
      let curR = 1.0;
      let curI = 0.0;
      const half = len >> 1;
      for (let k = 0; k < half; k++) {
        const a = i + k;
        const b = a + half;
        const vr = re[b] * curR - im[b] * curI;
        const vi = re[b] * curI + im[b] * curR;
        re[b] = re[a] - vr;
        im[b] = im[a] - vi;
        re[a] += vr;
        im[a] += vi;
        const nr = curR * wr - curI * wi;
        curI = curR * wi + curI * wr;
        curR = nr;
      }
    }
  }
  if (invert) {
    for (let i = 0; i < n; i++) {
      re[i] /= n;
      im[i] /= n;
    }
  }
}

/**
 * Bluestein expresses the length-n DFT as a circular convolution:
 * with the chirp c_k = exp(s*i*pi*k^2/n) (s = -1 forward, +1 inverse),
 *   X_k = c_k * sum_n (x_n c_n) conj(c)_{k-n},
 * and the convolution runs over a power-of-two length m >= 2n-1.
 */
interface BluesteinPlan {
  m: number;
  cosT: Float64Array; // cos(pi k^2 / n)
  sinT: Float64Array; // sin(pi k^2 / n)
  kernelR: [Float64Array, Float64Array]; // FFT of conj-chirp, [forward, inverse]
  kernelI: [Float64Array, Float64Array];
}

const planCache = new Map<number, BluesteinPlan>();

function bluesteinPlan(n: number): BluesteinPlan {
  const cached = planCache.get(n);
  if (cached) return cached;
  const m = nextPowerOfTwo(2 * n - 1);
  const cosT = new Float64Array(n);
  const sinT = new Float64Array(n);
  for (let k = 0; k < n; k++) {
    const sq = (k * k) % (2 * n); // k^2 mod 2n keeps the angle exact
    const angle = (Math.PI * sq) / n;
    cosT[k] = Math.cos(angle);
    sinT[k] = Math.sin(angle);
  }
  const kernelR: [Float64Array, Float64Array] = [new Float64Array(m), new Float64Array(m)];
  const kernelI: [Float64Array, Float64Array] = [new Float64Array(m), new Float64Array(m)];
  for (const dir of [0, 1] as const) {
    // conj(c)_k = exp(-s*i*pi*k^2/n); s = -1 for dir 0 (forward)
    const sgn = dir === 0 ? +1 : -1;
    const br = kernelR[dir];
    const bi = kernelI[dir];
    br[0] = cosT[0];
    bi[0] = sgn * sinT[0];
    for (let k = 1; k < n; k++) {
      br[k] = br[m - k] = cosT[k];
      bi[k] = bi[m - k] = sgn * sinT[k];
    }
    fftRadix2(br, bi, false);
  }
  const plan = { m, cosT, sinT, kernelR, kernelI };
  planCache.set(n, plan);
  return plan;
}

function fftBluestein(re: Float64Array, im: Float64Array, invert: boolean): void {
  const n = re.length;
  const { m, cosT, sinT, kernelR, kernelI } = bluesteinPlan(n);
  const s = invert ? 1 : -1;
  const dir = invert ? 1 : 0;
  const aR = new Float64Array(m);
  const aI = new Float64Array(m);
  for (let k = 0; k < n; k++) {
    // a_k = x_k * c_k with c_k = cos + i*s*sin
    aR[k] = re[k] * cosT[k] - s * im[k] * sinT[k];
    aI[k] = im[k] * cosT[k] + s * re[k] * sinT[k];
  }
  fftRadix2(aR, aI, false);
  const kr = kernelR[dir];
  const ki = kernelI[dir];
  for (let k = 0; k < m; k++) {
    const r = aR[k] * kr[k] - aI[k] * ki[k];
    const i = aR[k] * ki[k] + aI[k] * kr[k];
    aR[k] = r;
    aI[k] = i;
  }
  fftRadix2(aR, aI, true);
  for (let k = 0; k < n; k++) {
    re[k] = aR[k] * cosT[k] - s * aI[k] * sinT[k];
    im[k] = aI[k] * cosT[k] + s * aR[k] * sinT[k];
  }
  if (invert) {
    for (let k = 0; k < n; k++) {
      re[k] /= n;
      im[k] /= n;
    }
  }
}

export function fft(re: Float64Array, im: Float64Array): void {
  if (isPowerOfTwo(re.length)) fftRadix2(re, im, false);
  else fftBluestein(re, im, false);
}

export function ifft(re: Float64Array, im: Float64Array): void {
  if (isPowerOfTwo(re.length)) fftRadix2(re, im, true);
  else fftBluestein(re, im, true);
}
