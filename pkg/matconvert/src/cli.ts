#!/usr/bin/env node
/**
 * matconvert — turn KUL/DTU-style MATLAB EEG archives into .aadb files.
 *
 *   matconvert convert --dataset kul|dtu --in DIR --out FILE [--unit-gain] [--json]
 *   matconvert verify FILE [--json] [--expect-channels N] [--expect-rate HZ]
 *   matconvert fixture --dataset kul|dtu --out FILE [--trials N]
 *              [--trial-seconds S] [--rate HZ] [--channels N] [--seed N]
 *              [--mains AMPLITUDE]
 *
 * Exit codes: 0 success, 1 runtime failure / violations, 2 usage errors.
 */

import * as fs from "node:fs";

import { verifyAadb } from "./aadb.js";
import { Dataset, convertDirectory } from "./convert.js";
import { dtuSubjectMat, kulSubjectMat } from "./fixtures.js";

const BOOLEAN_FLAGS = new Set(["unit-gain", "json"]);

interface ParsedArgs {
  positional: string[];
  flags: Map<string, string | boolean>;
}

function parseArgs(argv: string[]): ParsedArgs {
  const flags = new Map<string, string | boolean>();
  const positional: string[] = [];
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith("--")) {
      positional.push(arg);
      continue;
    }
    const key = arg.slice(2);
    if (BOOLEAN_FLAGS.has(key)) {
      flags.set(key, true);
    } else if (i + 1 < argv.length) {
      flags.set(key, argv[++i]);
    } else {
      usage(`--${key} needs a value`);
    }
  }
  return { positional, flags };
}

function usage(message?: string): never {
  if (message) console.error(`error: usage: ${message}`);
  console.error(
    "usage: matconvert convert --dataset kul|dtu --in DIR --out FILE [--unit-gain] [--json]\n" +
    "       matconvert verify FILE [--json] [--expect-channels N] [--expect-rate HZ]\n" +
    "       matconvert fixture --dataset kul|dtu --out FILE [--trials N]\n" +
    "                  [--trial-seconds S] [--rate HZ] [--channels N] [--seed N] [--mains A]");
  process.exit(2);
}

function requireString(flags: Map<string, string | boolean>, key: string): string {
  const value = flags.get(key);
  if (typeof value !== "string") usage(`--${key} is required`);
  return value;
}

function numberFlag(flags: Map<string, string | boolean>, key: string,
                    fallback: number): number {
  const value = flags.get(key);
  if (value === undefined) return fallback;
  const parsed = Number(value);
  if (!Number.isFinite(parsed)) usage(`--${key} needs a number`);
  return parsed;
}

function datasetFlag(flags: Map<string, string | boolean>): Dataset {
  const value = requireString(flags, "dataset");
  if (value !== "kul" && value !== "dtu") usage("--dataset must be kul or dtu");
  return value;
}

function cmdConvert(flags: Map<string, string | boolean>): number {
  const dataset = datasetFlag(flags);
  const inDir = requireString(flags, "in");
  const outPath = requireString(flags, "out");
  const report = convertDirectory(inDir, dataset, outPath, {
    unitGain: flags.get("unit-gain") === true,
  });
  if (flags.get("json") === true) {
    console.log(JSON.stringify(report, null, 2));
  } else {
    for (const subject of report.subjects) {
      const minutes = subject.trials.reduce((a, t) => a + t.outSamples, 0) / 128 / 60;
      console.log(`${subject.subjectId}: ${subject.trials.length} trials, ` +
                  `${minutes.toFixed(1)} min`);
      for (const err of subject.errors) console.error(`  error: ${err}`);
    }
    console.log(`labels: ${report.labelCounts.left} left / ` +
                `${report.labelCounts.right} right -> ${outPath}`);
  }
  if (!report.ok) {
    console.error("error: convert: one or more trials failed");
    return 1;
  }
  return 0;
}

function cmdVerify(positional: string[], flags: Map<string, string | boolean>): number {
  if (positional.length !== 1) usage("verify needs exactly one file");
  const violations = verifyAadb(positional[0], {
    expectChannels: numberFlag(flags, "expect-channels", 64),
    expectRate: numberFlag(flags, "expect-rate", 128),
  });
  if (flags.get("json") === true) {
    console.log(JSON.stringify({ violations }, null, 2));
  } else if (violations.length === 0) {
    console.log("ok: no violations");
  } else {
    for (const v of violations) console.error(`violation: ${v}`);
  }
  return violations.length === 0 ? 0 : 1;
}

function cmdFixture(flags: Map<string, string | boolean>): number {
  const dataset = datasetFlag(flags);
  const outPath = requireString(flags, "out");
  const options = {
    trials: numberFlag(flags, "trials", dataset === "kul" ? 8 : 60),
    trialSeconds: numberFlag(flags, "trial-seconds", dataset === "kul" ? 360 : 50),
    sampleRate: numberFlag(flags, "rate", dataset === "kul" ? 256 : 128),
    channels: numberFlag(flags, "channels", 64),
    seed: numberFlag(flags, "seed", 1),
    mainsAmplitude: numberFlag(flags, "mains", dataset === "dtu" ? 2 : 0),
  };
  const buf = dataset === "kul" ? kulSubjectMat(options) : dtuSubjectMat(options);
  fs.writeFileSync(outPath, buf);
  console.log(`wrote ${outPath} (${(buf.length / 1e6).toFixed(1)} MB, ` +
              `${options.trials} trials @ ${options.sampleRate} Hz)`);
  return 0;
}

export function main(argv: string[]): number {
  if (argv.length === 0) usage();
  const [command, ...rest] = argv;
  const { positional, flags } = parseArgs(rest);
  try {
    if (command === "convert") {
      if (positional.length) usage(`unexpected argument ${positional[0]}`);
      return cmdConvert(flags);
    }
    if (command === "verify") return cmdVerify(positional, flags);
    if (command === "fixture") {
      if (positional.length) usage(`unexpected argument ${positional[0]}`);
      return cmdFixture(flags);
    }
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
  usage(`unknown command ${command}`);
}

const invokedDirectly = process.argv[1]?.endsWith("cli.js")
  || process.argv[1]?.endsWith("matconvert");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
