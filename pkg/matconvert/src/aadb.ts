/**
 * The .aadb container (shared with the Python detector):
 *
 *   AADB 1 <manifest bytes>\n
 *   <JSON manifest>
 *   <newline padding to a 4-byte boundary>
 *   <payload: float32 little-endian, channel-major per trial>
 *
 * Offsets in the manifest are relative to the payload start.
 */

import * as fs from "node:fs";

export type Side = "left" | "right";

export interface ConvertedTrial {
  subjectId: string;
  trialId: string;
  label: Side;
  channels: Float64Array[];
}

interface TrialEntry {
  trial_id: string;
  label: Side;
  n_samples: number;
  offset: number;
  nbytes: number;
}

interface SubjectEntry {
  subject_id: string;
  trials: TrialEntry[];
}

export interface Manifest {
  format_version: number;
  dataset_name: string;
  sample_rate: number;
  n_channels: number;
  subjects: SubjectEntry[];
}

export function writeAadb(path: string, datasetName: string, sampleRate: number,
                          nChannels: number, trials: ConvertedTrial[]): Manifest {
  const subjects: SubjectEntry[] = [];
  const bySubject = new Map<string, SubjectEntry>();
  let offset = 0;
  for (const trial of trials) {
    if (trial.channels.length !== nChannels) {
      throw new Error(
        `trial ${trial.subjectId}/${trial.trialId} has ${trial.channels.length} ` +
        `channels, manifest says ${nChannels}`);
    }
    const nSamples = trial.channels[0].length;
    for (const ch of trial.channels) {
      if (ch.length !== nSamples) {
        throw new Error(`trial ${trial.subjectId}/${trial.trialId} has ragged channels`);
      }
    }
    let entry = bySubject.get(trial.subjectId);
    if (!entry) {
      entry = { subject_id: trial.subjectId, trials: [] };
      bySubject.set(trial.subjectId, entry);
      subjects.push(entry);
    }
    const nbytes = nChannels * nSamples * 4;
    entry.trials.push({
      trial_id: trial.trialId,
      label: trial.label,
      n_samples: nSamples,
      offset,
      nbytes,
    });
    offset += nbytes;
  }
  const manifest: Manifest = {
    format_version: 1,
    dataset_name: datasetName,
    sample_rate: sampleRate,
    n_channels: nChannels,
    subjects,
  };
  const body = Buffer.from(JSON.stringify(manifest), "utf8");
  const header = Buffer.from(`AADB 1 ${body.length}\n`, "ascii");
  const pad = Buffer.alloc((4 - ((header.length + body.length) % 4)) % 4, 0x0a);

  const fd = fs.openSync(path, "w");
  try {
    fs.writeSync(fd, header);
    fs.writeSync(fd, body);
    if (pad.length) fs.writeSync(fd, pad);
    for (const trial of trials) {
      const nSamples = trial.channels[0].length;
      const block = new Float32Array(trial.channels.length * nSamples);
      trial.channels.forEach((ch, c) => block.set(ch, c * nSamples));
      fs.writeSync(fd, Buffer.from(block.buffer, 0, block.byteLength));
    }
  } finally {
    fs.closeSync(fd);
  }
  return manifest;
}

export interface OpenAadb {
  manifest: Manifest;
  payloadStart: number;
  payloadSize: number;
}

export function openAadb(path: string): OpenAadb {
  const fd = fs.openSync(path, "r");
  try {
    const head = Buffer.alloc(64);
    fs.readSync(fd, head, 0, head.length, 0);
    const newline = head.indexOf(0x0a);
    if (newline < 0) throw new Error(`${path}: missing header line`);
    const parts = head.toString("ascii", 0, newline).split(" ");
    if (parts.length !== 3 || parts[0] !== "AADB") {
      throw new Error(`${path}: not an .aadb file (bad magic)`);
    }
    const version = Number(parts[1]);
    if (version !== 1) throw new Error(`${path}: unsupported format version ${version}`);
    const manifestBytes = Number(parts[2]);
    const body = Buffer.alloc(manifestBytes);
    const got = fs.readSync(fd, body, 0, manifestBytes, newline + 1);
    if (got !== manifestBytes) throw new Error(`${path}: manifest truncated`);
    let payloadStart = newline + 1 + manifestBytes;
    payloadStart += (4 - (payloadStart % 4)) % 4;
    const fileSize = fs.fstatSync(fd).size;
    const manifest = JSON.parse(body.toString("utf8")) as Manifest;
    return { manifest, payloadStart, payloadSize: fileSize - payloadStart };
  } finally {
    fs.closeSync(fd);
  }
}

export function readTrialSamples(path: string, open: OpenAadb,
                                 entry: TrialEntry): Float32Array {
  const buf = Buffer.alloc(entry.nbytes);
  const fd = fs.openSync(path, "r");
  try {
    const got = fs.readSync(fd, buf, 0, entry.nbytes, open.payloadStart + entry.offset);
    if (got !== entry.nbytes) throw new Error(`trial ${entry.trial_id}: payload truncated`);
  } finally {
    fs.closeSync(fd);
  }
  return new Float32Array(buf.buffer, buf.byteOffset, entry.nbytes / 4);
}

export interface VerifyOptions {
  expectChannels?: number;
  expectRate?: number;
  checkSamples?: boolean;
}

/** Container validation; returns a violation list (empty = clean). */
export function verifyAadb(path: string, options: VerifyOptions = {}): string[] {
  const { expectChannels = 64, expectRate = 128, checkSamples = true } = options;
  const violations: string[] = [];
  let open: OpenAadb;
  try {
    open = openAadb(path);
  } catch (err) {
    return [(err as Error).message];
  }
  const { manifest, payloadSize } = open;
  if (manifest.n_channels !== expectChannels) {
    violations.push(`expected ${expectChannels} channels, manifest says ${manifest.n_channels}`);
  }
  if (manifest.sample_rate !== expectRate) {
    violations.push(`expected ${expectRate} Hz, manifest says ${manifest.sample_rate}`);
  }
  const spans: Array<{ lo: number; hi: number; id: string }> = [];
  for (const subject of manifest.subjects) {
    for (const trial of subject.trials) {
      const id = `${subject.subject_id}/${trial.trial_id}`;
      if (trial.label !== "left" && trial.label !== "right") {
        violations.push(`trial ${id}: unknown label ${trial.label}`);
        continue;
      }
      if (trial.nbytes !== trial.n_samples * manifest.n_channels * 4) {
        violations.push(`trial ${id}: manifest size inconsistent`);
        continue;
      }
      if (trial.offset < 0 || trial.offset + trial.nbytes > payloadSize) {
        violations.push(`trial ${id}: payload truncated`);
        continue;
      }
      spans.push({ lo: trial.offset, hi: trial.offset + trial.nbytes, id });
      if (checkSamples) {
        const samples = readTrialSamples(path, open, trial);
        for (let i = 0; i < samples.length; i++) {
          if (!Number.isFinite(samples[i])) {
            violations.push(`trial ${id}: non-finite samples`);
            break;
          }
        }
      }
    }
  }
  spans.sort((a, b) => a.lo - b.lo);
  for (let i = 1; i < spans.length; i++) {
    if (spans[i].lo < spans[i - 1].hi) {
      violations.push(`trials ${spans[i - 1].id} and ${spans[i].id} overlap in the payload`);
    }
  }
  return violations;
}
