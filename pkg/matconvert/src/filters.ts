/**
 * The preprocessing DSP: Butterworth biquad cascades (causal and
 * zero-phase), FFT-bin notch, and FFT-based resampling. Everything works
 * on one channel (Float64Array) at a time; callers map over channels.
 */

import { fft, ifft } from "./fft.js";

export interface Biquad {
  b0: number; b1: number; b2: number;
  a1: number; a2: number;
}

/** Butterworth pole Q values for an even-order cascade of biquads. */
function butterworthQs(order: number): number[] {
  if (order < 2 || order % 2 !== 0) {
    throw new Error(`Butterworth cascade needs an even order, got ${order}`);
  }
  const qs: number[] = [];
  const n = order;
  for (let k = 0; k < n / 2; k++) {
    // pole angle of the k-th conjugate pair on the Butterworth circle
    const theta = (Math.PI * (2 * k + 1)) / (2 * n);
    qs.push(1 / (2 * Math.sin(theta)));
  }
  return qs;
}

function biquad(kind: "lowpass" | "highpass", cutoffHz: number,
                sampleRate: number, q: number): Biquad {
  const w0 = (2 * Math.PI * cutoffHz) / sampleRate;
  const alpha = Math.sin(w0) / (2 * q);
  const cosw = Math.cos(w0);
  const a0 = 1 + alpha;
  if (kind === "highpass") {
    return {
      b0: (1 + cosw) / 2 / a0,
      b1: -(1 + cosw) / a0,
      b2: (1 + cosw) / 2 / a0,
      a1: (-2 * cosw) / a0,
      a2: (1 - alpha) / a0,
    };
  }
  return {
    b0: (1 - cosw) / 2 / a0,
    b1: (1 - cosw) / a0,
    b2: (1 - cosw) / 2 / a0,
    a1: (-2 * cosw) / a0,
    a2: (1 - alpha) / a0,
  };
}

export function butterworthHighpass(cutoffHz: number, sampleRate: number,
                                    order = 4): Biquad[] {
  if (cutoffHz <= 0 || cutoffHz >= sampleRate / 2) {
    throw new Error(`high-pass cutoff ${cutoffHz} Hz outside (0, Nyquist)`);
  }
  return butterworthQs(order).map((q) => biquad("highpass", cutoffHz, sampleRate, q));
}

export function butterworthLowpass(cutoffHz: number, sampleRate: number,
                                   order = 4): Biquad[] {
  if (cutoffHz <= 0 || cutoffHz >= sampleRate / 2) {
    throw new Error(`low-pass cutoff ${cutoffHz} Hz outside (0, Nyquist)`);
  }
  return butterworthQs(order).map((q) => biquad("lowpass", cutoffHz, sampleRate, q));
}

/** Single causal pass of a biquad cascade (direct form I). */
export function filterForward(sections: Biquad[], x: Float64Array): Float64Array {
  let cur = x;
  for (const s of sections) {
    const out = new Float64Array(cur.length);
    let x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (let i = 0; i < cur.length; i++) {
      const xi = cur[i];
      const yi = s.b0 * xi + s.b1 * x1 + s.b2 * x2 - s.a1 * y1 - s.a2 * y2;
      x2 = x1; x1 = xi;
      y2 = y1; y1 = yi;
      out[i] = yi;
    }
    cur = out;
  }
  return cur;
}

/** Zero-phase filtering: forward pass, reverse, forward again, reverse. */
export function filtfilt(sections: Biquad[], x: Float64Array): Float64Array {
  const forward = filterForward(sections, x);
  forward.reverse();
  const back = filterForward(sections, forward);
  back.reverse();
  return back;
}

/**
 * Zero the FFT bins within +-width of every target frequency (and its
 * mirror), exactly the deterministic mask philosophy of the band
 * decomposition on the feature side.
 */
export function fftNotch(x: Float64Array, sampleRate: number,
                         freqs: number[], width = 0.5): Float64Array {
  const n = x.length;
  const re = Float64Array.from(x);
  const im = new Float64Array(n);
  fft(re, im);
  for (let k = 0; k < n; k++) {
    const f = (k <= n / 2 ? k : k - n) * (sampleRate / n);
    for (const target of freqs) {
      if (Math.abs(Math.abs(f) - target) <= width) {
        re[k] = 0;
        im[k] = 0;
        break;
      }
    }
  }
  ifft(re, im);
  return re;
}

/**
 * Fourier-domain resampling: keep the spectrum below the new Nyquist,
 * inverse-transform at the new length. The output length is
 * round(n * targetRate / sourceRate); both rates must make that exact
 * (integer samples), which holds for the 512->128 and 256->128 cases and
 * any whole-second trial.
 */
export function fftResample(x: Float64Array, sourceRate: number,
                            targetRate: number): Float64Array {
  if (sourceRate === targetRate) return Float64Array.from(x);
  if (targetRate > sourceRate) {
    throw new Error("only downsampling is supported");
  }
  const n = x.length;
  const nOut = Math.round((n * targetRate) / sourceRate);
  if (Math.abs(nOut * sourceRate - n * targetRate) > 1e-6) {
    throw new Error(
      `resampling ${n} samples from ${sourceRate} to ${targetRate} Hz ` +
      `is not an integer number of output samples`);
  }
  const re = Float64Array.from(x);
  const im = new Float64Array(n);
  fft(re, im);
  const outR = new Float64Array(nOut);
  const outI = new Float64Array(nOut);
  const half = Math.floor(nOut / 2);
  outR[0] = re[0];
  outI[0] = im[0];
  for (let k = 1; k < half; k++) {
    outR[k] = re[k];
    outI[k] = im[k];
    outR[nOut - k] = re[n - k];
    outI[nOut - k] = im[n - k];
  }
  if (nOut % 2 === 0) {
    // new Nyquist bin: average the conjugate pair it folds onto (real)
    outR[half] = (re[half] + re[n - half]) / 2;
    outI[half] = 0;
  } else {
    outR[half] = re[half];
    outI[half] = im[half];
    outR[nOut - half] = re[n - half];
    outI[nOut - half] = im[n - half];
  }
  ifft(outR, outI);
  const scale = nOut / n;
  for (let i = 0; i < nOut; i++) outR[i] *= scale;
  return outR;
}

/** Per-channel z-normalization; constant channels become all-zero. */
export function znormChannel(x: Float64Array): Float64Array {
  const n = x.length;
  let mean = 0;
  for (let i = 0; i < n; i++) mean += x[i];
  mean /= n;
  let varSum = 0;
  for (let i = 0; i < n; i++) {
    const d = x[i] - mean;
    varSum += d * d;
  }
  const std = Math.sqrt(varSum / n);
  const out = new Float64Array(n);
  if (std > 0) {
    for (let i = 0; i < n; i++) out[i] = (x[i] - mean) / std;
  }
  return out;
}

/** Decimate by an integer factor (caller provides anti-aliasing). */
export function decimate(x: Float64Array, factor: number): Float64Array {
  if (!Number.isInteger(factor) || factor < 1) {
    throw new Error(`decimation factor must be a positive integer, got ${factor}`);
  }
  const out = new Float64Array(Math.floor(x.length / factor));
  for (let i = 0; i < out.length; i++) out[i] = x[i * factor];
  return out;
}
