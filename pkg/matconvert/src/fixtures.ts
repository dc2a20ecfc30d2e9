/**
 * Synthetic source archives shaped like the two 64-channel corpora, for
 * developing and testing the converter without the real recordings.
 *
 * KUL-shaped subject file: a cell array `preproc_trials`, one struct per
 * trial with RawData.EegData (samples x channels), FileHeader.SampleRate,
 * and attended_ear ('L'/'R').
 *
 * DTU-shaped subject file: a struct `data` with eeg (cell of
 * samples x channels matrices), fsample, and attend_lr (1 = left,
 * 2 = right per trial).
 */

import { MatValue, matrix, scalar, writeMat } from "./mat.js";

/** Deterministic 32-bit PRNG (mulberry32). */
export function rng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function gaussianPair(uniform: () => number): [number, number] {
  const u = Math.max(uniform(), 1e-12);
  const v = uniform();
  const r = Math.sqrt(-2 * Math.log(u));
  return [r * Math.cos(2 * Math.PI * v), r * Math.sin(2 * Math.PI * v)];
}

export interface FixtureOptions {
  trials: number;
  trialSeconds: number;
  sampleRate: number;
  channels: number;
  seed: number;
  /** add a strong 50 Hz mains component (for notch testing) */
  mainsAmplitude?: number;
}

/**
 * One trial of noisy EEG-like content: per-channel Gaussian noise, a
 * 12 Hz tone, optionally 50 Hz mains. Column-major (samples fastest), so
 * each channel occupies a contiguous block.
 */
function trialSamples(opts: FixtureOptions, random: () => number): Float32Array {
  const n = Math.round(opts.trialSeconds * opts.sampleRate);
  const data = new Float32Array(n * opts.channels);
  const mains = opts.mainsAmplitude ?? 0;
  for (let c = 0; c < opts.channels; c++) {
    const phase = random() * 2 * Math.PI;
    const base = c * n;
    for (let i = 0; i < n; i += 2) {
      const [g1, g2] = gaussianPair(random);
      const t1 = i / opts.sampleRate;
      data[base + i] = g1
        + Math.sin(2 * Math.PI * 12 * t1 + phase)
        + mains * Math.sin(2 * Math.PI * 50 * t1);
      if (i + 1 < n) {
        const t2 = (i + 1) / opts.sampleRate;
        data[base + i + 1] = g2
          + Math.sin(2 * Math.PI * 12 * t2 + phase)
          + mains * Math.sin(2 * Math.PI * 50 * t2);
      }
    }
  }
  return data;
}

export function kulSubjectMat(opts: FixtureOptions): Buffer {
  const random = rng(opts.seed);
  const n = Math.round(opts.trialSeconds * opts.sampleRate);
  const items: MatValue[] = [];
  for (let t = 0; t < opts.trials; t++) {
    items.push({
      kind: "struct",
      fields: {
        RawData: {
          kind: "struct",
          fields: { EegData: matrix([n, opts.channels], trialSamples(opts, random)) },
        },
        FileHeader: {
          kind: "struct",
          fields: { SampleRate: scalar(opts.sampleRate) },
        },
        attended_ear: { kind: "char", text: t % 2 === 0 ? "L" : "R" },
      },
    });
  }
  return writeMat({
    preproc_trials: { kind: "cell", dims: [1, opts.trials], items },
  });
}

export function dtuSubjectMat(opts: FixtureOptions): Buffer {
  const random = rng(opts.seed);
  const n = Math.round(opts.trialSeconds * opts.sampleRate);
  const eeg: MatValue[] = [];
  const attend = new Float64Array(opts.trials);
  for (let t = 0; t < opts.trials; t++) {
    eeg.push(matrix([n, opts.channels], trialSamples(opts, random)));
    attend[t] = t % 2 === 0 ? 1 : 2; // 1 = left, 2 = right
  }
  return writeMat({
    data: {
      kind: "struct",
      fields: {
        eeg: { kind: "cell", dims: [1, opts.trials], items: eeg },
        fsample: scalar(opts.sampleRate),
        attend_lr: matrix([1, opts.trials], attend),
      },
    },
  });
}
