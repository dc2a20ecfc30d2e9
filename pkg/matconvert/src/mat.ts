/**
 * Minimal MATLAB level-5 (.mat) reader and writer.
 *
 * Covers the subset the EEG corpora use: numeric matrices (double or
 * single, real), char arrays, cell arrays, and scalar structs, little
 * endian, uncompressed. The reader additionally accepts integer-encoded
 * numeric payloads and small-format data elements; compressed elements
 * and big-endian files are rejected with a clear message.
 */

// MAT data element types
const miINT8 = 1, miUINT8 = 2, miINT16 = 3, miUINT16 = 4, miINT32 = 5,
      miUINT32 = 6, miSINGLE = 7, miDOUBLE = 9, miMATRIX = 14,
      miCOMPRESSED = 15, miUTF8 = 16;

// array classes
const mxCELL = 1, mxSTRUCT = 2, mxCHAR = 4, mxDOUBLE = 6, mxSINGLE = 7,
      mxINT8 = 8, mxUINT8 = 9, mxINT16 = 10, mxUINT16 = 11, mxINT32 = 12,
      mxUINT32 = 13;

export interface MatMatrix {
  kind: "matrix";
  dims: number[];
  /** column-major values; a Float32Array is written as MATLAB single */
  data: Float64Array | Float32Array;
}

export interface MatChar {
  kind: "char";
  text: string;
}

export interface MatCell {
  kind: "cell";
  dims: number[];
  items: MatValue[];
}

export interface MatStruct {
  kind: "struct";
  fields: Record<string, MatValue>;
}

export type MatValue = MatMatrix | MatChar | MatCell | MatStruct;

export function matrix(dims: number[], data: Float64Array | Float32Array): MatMatrix {
  const count = dims.reduce((a, b) => a * b, 1);
  if (count !== data.length) {
    throw new Error(`matrix dims [${dims}] need ${count} values, got ${data.length}`);
  }
  return { kind: "matrix", dims, data };
}

export function scalar(value: number): MatMatrix {
  return matrix([1, 1], Float64Array.of(value));
}

// ---------------------------------------------------------------- writer

function tag(type: number, nbytes: number): Buffer {
  const buf = Buffer.alloc(8);
  buf.writeUInt32LE(type, 0);
  buf.writeUInt32LE(nbytes, 4);
  return buf;
}

function padTo8(chunks: Buffer[], nbytes: number): void {
  const rem = nbytes % 8;
  if (rem !== 0) chunks.push(Buffer.alloc(8 - rem));
}

function dataElement(type: number, payload: Buffer): Buffer[] {
  const chunks = [tag(type, payload.length), payload];
  padTo8(chunks, payload.length);
  return chunks;
}

function matrixElement(name: string, value: MatValue): Buffer[] {
  const body: Buffer[] = [];

  let cls: number;
  let dims: number[];
  if (value.kind === "matrix") {
    cls = value.data instanceof Float32Array ? mxSINGLE : mxDOUBLE;
    dims = value.dims;
  } else if (value.kind === "char") {
    cls = mxCHAR;
    dims = [1, value.text.length];
  } else if (value.kind === "cell") {
    cls = mxCELL;
    dims = value.dims;
  } else {
    cls = mxSTRUCT;
    dims = [1, 1];
  }

  const flags = Buffer.alloc(8);
  flags.writeUInt32LE(cls, 0);
  body.push(...dataElement(miUINT32, flags));

  const dimBuf = Buffer.alloc(dims.length * 4);
  dims.forEach((d, i) => dimBuf.writeInt32LE(d, i * 4));
  body.push(...dataElement(miINT32, dimBuf));

  body.push(...dataElement(miINT8, Buffer.from(name, "ascii")));

  if (value.kind === "matrix") {
    const single = value.data instanceof Float32Array;
    const payload = Buffer.from(value.data.buffer, value.data.byteOffset,
                                value.data.byteLength);
    body.push(...dataElement(single ? miSINGLE : miDOUBLE, payload));
  } else if (value.kind === "char") {
    const payload = Buffer.alloc(value.text.length * 2);
    for (let i = 0; i < value.text.length; i++) {
      payload.writeUInt16LE(value.text.charCodeAt(i), i * 2);
    }
    body.push(...dataElement(miUINT16, payload));
  } else if (value.kind === "cell") {
    const count = dims.reduce((a, b) => a * b, 1);
    if (count !== value.items.length) {
      throw new Error(`cell dims [${dims}] need ${count} items, got ${value.items.length}`);
    }
    for (const item of value.items) body.push(...matrixElement("", item));
  } else {
    const names = Object.keys(value.fields);
    const fieldLen = Buffer.alloc(4);
    fieldLen.writeInt32LE(32, 0);
    body.push(...dataElement(miINT32, fieldLen));
    const nameBuf = Buffer.alloc(32 * names.length);
    names.forEach((n, i) => {
      if (n.length > 31) throw new Error(`struct field name too long: ${n}`);
      nameBuf.write(n, i * 32, "ascii");
    });
    body.push(...dataElement(miINT8, nameBuf));
    for (const n of names) body.push(...matrixElement("", value.fields[n]));
  }

  const payload = Buffer.concat(body);
  return [tag(miMATRIX, payload.length), payload];
}

export function writeMat(variables: Record<string, MatValue>): Buffer {
  const header = Buffer.alloc(128, 0x20);
  header.write("MATLAB 5.0 MAT-file, created by matconvert", 0, "ascii");
  header.fill(0, 116, 124); // subsystem data offset: none
  header.writeUInt16LE(0x0100, 124);
  header.write("IM", 126, "ascii"); // little-endian indicator
  const chunks: Buffer[] = [header];
  for (const [name, value] of Object.entries(variables)) {
    chunks.push(...matrixElement(name, value));
  }
  return Buffer.concat(chunks);
}

// ---------------------------------------------------------------- reader

class Cursor {
  constructor(readonly buf: Buffer, public pos: number) {}

  u32(): number {
    const v = this.buf.readUInt32LE(this.pos);
    this.pos += 4;
    return v;
  }
}

interface RawElement {
  type: number;
  start: number;
  nbytes: number;
}

function readElementHeader(cur: Cursor): RawElement {
  const first = cur.u32();
  if (first >>> 16 !== 0) {
    // small data element: numBytes in the high 16 bits, data in the
    // remaining 4 bytes of the tag
    const type = first & 0xffff;
    const nbytes = first >>> 16;
    const start = cur.pos;
    cur.pos += 4;
    return { type, start, nbytes };
  }
  const nbytes = cur.u32();
  const start = cur.pos;
  cur.pos = start + nbytes + ((8 - (nbytes % 8)) % 8);
  return { type: first, start, nbytes };
}

function numericToF64(buf: Buffer, el: RawElement): Float64Array {
  const { type, start, nbytes } = el;
  const read: [number, (off: number) => number] | undefined = {
    [miINT8]: [1, (o: number) => buf.readInt8(o)],
    [miUINT8]: [1, (o: number) => buf.readUInt8(o)],
    [miINT16]: [2, (o: number) => buf.readInt16LE(o)],
    [miUINT16]: [2, (o: number) => buf.readUInt16LE(o)],
    [miINT32]: [4, (o: number) => buf.readInt32LE(o)],
    [miUINT32]: [4, (o: number) => buf.readUInt32LE(o)],
    [miSINGLE]: [4, (o: number) => buf.readFloatLE(o)],
    [miDOUBLE]: [8, (o: number) => buf.readDoubleLE(o)],
  }[type] as [number, (off: number) => number] | undefined;
  if (!read) throw new Error(`unsupported numeric MAT data type ${type}`);
  const [size, fn] = read;
  const n = nbytes / size;
  // fast path for aligned float payloads
  if (type === miDOUBLE && (buf.byteOffset + start) % 8 === 0) {
    return new Float64Array(buf.buffer, buf.byteOffset + start, n).slice();
  }
  if (type === miSINGLE && (buf.byteOffset + start) % 4 === 0) {
    return Float64Array.from(new Float32Array(buf.buffer, buf.byteOffset + start, n));
  }
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) out[i] = fn(start + i * size);
  return out;
}

function decodeChar(buf: Buffer, el: RawElement): string {
  if (el.type === miUINT16) {
    let out = "";
    for (let i = 0; i < el.nbytes; i += 2) {
      out += String.fromCharCode(buf.readUInt16LE(el.start + i));
    }
    return out;
  }
  if (el.type === miUINT8 || el.type === miUTF8 || el.type === miINT8) {
    return buf.toString("utf8", el.start, el.start + el.nbytes);
  }
  throw new Error(`unsupported char encoding type ${el.type}`);
}

function parseMatrix(buf: Buffer, el: RawElement): { name: string; value: MatValue } {
  const cur = new Cursor(buf, el.start);
  const end = el.start + el.nbytes;

  const flagsEl = readElementHeader(cur);
  const cls = buf.readUInt32LE(flagsEl.start) & 0xff;
  const complex = (buf.readUInt32LE(flagsEl.start) >>> 8) & 0x08;
  if (complex) throw new Error("complex MAT arrays are not supported");

  const dimsEl = readElementHeader(cur);
  const dims: number[] = [];
  for (let i = 0; i < dimsEl.nbytes / 4; i++) {
    dims.push(buf.readInt32LE(dimsEl.start + i * 4));
  }

  const nameEl = readElementHeader(cur);
  const name = buf.toString("ascii", nameEl.start, nameEl.start + nameEl.nbytes);

  const count = dims.reduce((a, b) => a * b, 1);

  if (cls === mxCHAR) {
    const dataEl = readElementHeader(cur);
    return { name, value: { kind: "char", text: decodeChar(buf, dataEl) } };
  }
  if (cls === mxCELL) {
    const items: MatValue[] = [];
    for (let i = 0; i < count; i++) {
      const sub = readElementHeader(cur);
      if (sub.type !== miMATRIX) throw new Error("cell item is not a matrix element");
      items.push(parseMatrix(buf, sub).value);
    }
    return { name, value: { kind: "cell", dims, items } };
  }
  if (cls === mxSTRUCT) {
    if (count !== 1) throw new Error("only scalar (1x1) structs are supported");
    const lenEl = readElementHeader(cur);
    const fieldLen = buf.readInt32LE(lenEl.start);
    const namesEl = readElementHeader(cur);
    const nFields = namesEl.nbytes / fieldLen;
    const fieldNames: string[] = [];
    for (let i = 0; i < nFields; i++) {
      const raw = buf.toString("ascii", namesEl.start + i * fieldLen,
                               namesEl.start + (i + 1) * fieldLen);
      fieldNames.push(raw.replace(/\0+$/, ""));
    }
    const fields: Record<string, MatValue> = {};
    for (const fieldName of fieldNames) {
      const sub = readElementHeader(cur);
      if (sub.type !== miMATRIX) throw new Error("struct field is not a matrix element");
      fields[fieldName] = parseMatrix(buf, sub).value;
    }
    return { name, value: { kind: "struct", fields } };
  }
  if ([mxDOUBLE, mxSINGLE, mxINT8, mxUINT8, mxINT16, mxUINT16, mxINT32,
       mxUINT32].includes(cls)) {
    if (cur.pos >= end && count > 0) throw new Error("numeric matrix missing data");
    const dataEl = count > 0 ? readElementHeader(cur)
                             : { type: miDOUBLE, start: cur.pos, nbytes: 0 };
    const data = numericToF64(buf, dataEl);
    if (data.length !== count) {
      throw new Error(`matrix ${name || "<anonymous>"}: dims [${dims}] ` +
                      `expect ${count} values, payload has ${data.length}`);
    }
    return { name, value: { kind: "matrix", dims, data } };
  }
  throw new Error(`unsupported MAT array class ${cls}`);
}

export function readMat(buf: Buffer): Record<string, MatValue> {
  if (buf.length < 128) throw new Error("not a MAT-file: too short");
  const endian = buf.toString("ascii", 126, 128);
  if (endian === "MI") throw new Error("big-endian MAT-files are not supported");
  if (endian !== "IM") throw new Error("not a level-5 MAT-file (bad endian marker)");
  const out: Record<string, MatValue> = {};
  const cur = new Cursor(buf, 128);
  while (cur.pos < buf.length) {
    const el = readElementHeader(cur);
    if (el.type === miCOMPRESSED) {
      throw new Error(
        "compressed MAT elements are not supported; re-save with -v6 or -nocompression");
    }
    if (el.type !== miMATRIX) {
      continue; // skip unknown top-level elements
    }
    const { name, value } = parseMatrix(buf, el);
    out[name] = value;
  }
  return out;
}
