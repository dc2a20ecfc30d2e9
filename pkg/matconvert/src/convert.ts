/**
 * Directory conversion: one .mat per subject in, one .aadb out.
 *
 * Preprocessing chains (target rate 128 Hz, per-trial z-normalization):
 *   kul:  0.1-50 Hz band-pass (4th-order zero-phase Butterworth: forward
 *         and reverse pass of a high-pass + low-pass cascade), integer
 *         decimation to 128 Hz, z-norm.
 *   dtu:  FFT-bin notch at 50 Hz and harmonics (+-0.5 Hz), FFT resample
 *         to 128 Hz, 4th-order forward (causal) Butterworth high-pass at
 *         1.0 Hz, z-norm.
 *   unit-gain: pass-through (source must already be 64 ch @ 128 Hz);
 *         exists so container plumbing can be tested independently of
 *         the DSP.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { ConvertedTrial, Manifest, Side, writeAadb } from "./aadb.js";
import { MatValue, readMat } from "./mat.js";
import {
  butterworthHighpass, butterworthLowpass, decimate, fftNotch, fftResample,
  filterForward, filtfilt, znormChannel,
} from "./filters.js";

export const TARGET_RATE = 128;
export const EXPECTED_CHANNELS = 64;

export type Dataset = "kul" | "dtu";

export interface SourceTrial {
  /** per-channel samples at the source rate */
  channels: Float64Array[];
  sampleRate: number;
  label: Side;
}

// ------------------------------------------------------------- parsers

function asMatrix(value: MatValue | undefined, what: string) {
  if (!value || value.kind !== "matrix") throw new Error(`${what}: expected a numeric matrix`);
  return value;
}

function asStruct(value: MatValue | undefined, what: string) {
  if (!value || value.kind !== "struct") throw new Error(`${what}: expected a struct`);
  return value;
}

function asCell(value: MatValue | undefined, what: string) {
  if (!value || value.kind !== "cell") throw new Error(`${what}: expected a cell array`);
  return value;
}

function splitChannels(mat: { dims: number[]; data: Float64Array | Float32Array },
                       what: string): Float64Array[] {
  if (mat.dims.length !== 2) throw new Error(`${what}: expected samples x channels`);
  const [nSamples, nChannels] = mat.dims;
  const data = mat.data instanceof Float64Array ? mat.data : Float64Array.from(mat.data);
  const channels: Float64Array[] = [];
  for (let c = 0; c < nChannels; c++) {
    // column-major: each channel is one contiguous column
    channels.push(data.subarray(c * nSamples, (c + 1) * nSamples));
  }
  return channels;
}

export function parseKulSubject(vars: Record<string, MatValue>): SourceTrial[] {
  const cell = asCell(vars["preproc_trials"], "preproc_trials");
  return cell.items.map((item, idx) => {
    const what = `preproc_trials{${idx + 1}}`;
    const trial = asStruct(item, what);
    const raw = asStruct(trial.fields["RawData"], `${what}.RawData`);
    const eeg = asMatrix(raw.fields["EegData"], `${what}.RawData.EegData`);
    const header = asStruct(trial.fields["FileHeader"], `${what}.FileHeader`);
    const rate = asMatrix(header.fields["SampleRate"], `${what}.FileHeader.SampleRate`);
    const ear = trial.fields["attended_ear"];
    if (!ear || ear.kind !== "char" || !/^[LR]/.test(ear.text)) {
      throw new Error(`${what}: attended_ear must be 'L' or 'R'`);
    }
    return {
      channels: splitChannels(eeg, `${what}.RawData.EegData`),
      sampleRate: rate.data[0],
      label: (ear.text[0] === "L" ? "left" : "right") as Side,
    };
  });
}

export function parseDtuSubject(vars: Record<string, MatValue>): SourceTrial[] {
  const data = asStruct(vars["data"], "data");
  const eeg = asCell(data.fields["eeg"], "data.eeg");
  const rate = asMatrix(data.fields["fsample"], "data.fsample").data[0];
  const attend = asMatrix(data.fields["attend_lr"], "data.attend_lr").data;
  if (attend.length !== eeg.items.length) {
    throw new Error(
      `data.attend_lr has ${attend.length} labels for ${eeg.items.length} trials`);
  }
  return eeg.items.map((item, idx) => {
    const code = attend[idx];
    if (code !== 1 && code !== 2) {
      throw new Error(`data.attend_lr(${idx + 1}) must be 1 (left) or 2 (right), got ${code}`);
    }
    return {
      channels: splitChannels(asMatrix(item, `data.eeg{${idx + 1}}`), `data.eeg{${idx + 1}}`),
      sampleRate: rate,
      label: (code === 1 ? "left" : "right") as Side,
    };
  });
}

// ------------------------------------------------------------- recipes

export function kulChain(trial: SourceTrial): Float64Array[] {
  const rate = trial.sampleRate;
  if (rate % TARGET_RATE !== 0) {
    throw new Error(`source rate ${rate} Hz is not an integer multiple of ${TARGET_RATE}`);
  }
  const factor = rate / TARGET_RATE;
  const highpass = butterworthHighpass(0.1, rate, 4);
  const lowpass = butterworthLowpass(50.0, rate, 4);
  return trial.channels.map((ch) => {
    let x = filtfilt(highpass, ch);
    x = filtfilt(lowpass, x);
    x = decimate(x, factor);
    return znormChannel(x);
  });
}

export function dtuChain(trial: SourceTrial): Float64Array[] {
  const rate = trial.sampleRate;
  const mains: number[] = [];
  for (let f = 50; f < rate / 2; f += 50) mains.push(f);
  const highpass = butterworthHighpass(1.0, TARGET_RATE, 4);
  return trial.channels.map((ch) => {
    let x = mains.length ? fftNotch(ch, rate, mains, 0.5) : Float64Array.from(ch);
    x = fftResample(x, rate, TARGET_RATE);
    x = filterForward(highpass, x); // forward-only, as the recipe specifies
    return znormChannel(x);
  });
}

export function unitChain(trial: SourceTrial): Float64Array[] {
  if (trial.sampleRate !== TARGET_RATE) {
    throw new Error(`unit-gain chain requires ${TARGET_RATE} Hz sources, got ${trial.sampleRate}`);
  }
  return trial.channels.map((ch) => Float64Array.from(ch));
}

// ------------------------------------------------------------- conversion

export interface TrialReport {
  trialId: string;
  label: Side;
  inSamples: number;
  outSamples: number;
}

export interface SubjectReport {
  subjectId: string;
  file: string;
  trials: TrialReport[];
  errors: string[];
}

export interface ConversionReport {
  dataset: Dataset;
  unitGain: boolean;
  output: string;
  subjects: SubjectReport[];
  labelCounts: { left: number; right: number };
  ok: boolean;
  manifest?: Manifest;
}

export interface ConvertOptions {
  unitGain?: boolean;
}

export function convertDirectory(inDir: string, dataset: Dataset,
                                 outPath: string,
                                 options: ConvertOptions = {}): ConversionReport {
  const unitGain = options.unitGain ?? false;
  const files = fs.readdirSync(inDir)
    .filter((f) => f.toLowerCase().endsWith(".mat"))
    .sort();
  if (files.length === 0) throw new Error(`no .mat files under ${inDir}`);

  const parse = dataset === "kul" ? parseKulSubject : parseDtuSubject;
  const chain = unitGain ? unitChain : dataset === "kul" ? kulChain : dtuChain;

  const converted: ConvertedTrial[] = [];
  const report: ConversionReport = {
    dataset, unitGain, output: outPath, subjects: [],
    labelCounts: { left: 0, right: 0 }, ok: true,
  };
  for (const file of files) {
    const subjectId = path.basename(file).replace(/\.mat$/i, "");
    const subject: SubjectReport = { subjectId, file, trials: [], errors: [] };
    report.subjects.push(subject);
    let trials: SourceTrial[];
    try {
      trials = parse(readMat(fs.readFileSync(path.join(inDir, file))));
    } catch (err) {
      subject.errors.push(`unparseable file: ${(err as Error).message}`);
      report.ok = false;
      continue;
    }
    trials.forEach((trial, idx) => {
      const trialId = `trial${String(idx + 1).padStart(2, "0")}`;
      try {
        if (trial.channels.length !== EXPECTED_CHANNELS) {
          throw new Error(
            `expected ${EXPECTED_CHANNELS} channels, got ${trial.channels.length}`);
        }
        const out = chain(trial);
        converted.push({ subjectId, trialId, label: trial.label, channels: out });
        subject.trials.push({
          trialId,
          label: trial.label,
          inSamples: trial.channels[0].length,
          outSamples: out[0].length,
        });
        report.labelCounts[trial.label] += 1;
      } catch (err) {
        subject.errors.push(`${trialId}: ${(err as Error).message}`);
        report.ok = false;
      }
    });
  }
  report.manifest = writeAadb(outPath, dataset, TARGET_RATE, EXPECTED_CHANNELS, converted);
  return report;
}
