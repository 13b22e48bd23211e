// Hair-mask run-length encoding, matching the engine's frame format:
// row-major, space-separated run lengths alternating values starting with
// False (a mask that begins with hair starts "0 ..."). Runs sum to w*h.

export function encodeMask(mask: Uint8Array | boolean[]): string {
  const n = mask.length;
  if (n === 0) return "";
  const runs: number[] = [];
  let current = Boolean(mask[0]);
  let count = 1;
  for (let i = 1; i < n; i++) {
    const v = Boolean(mask[i]);
    if (v === current) {
      count++;
    } else {
      runs.push(count);
      current = v;
      count = 1;
    }
  }
  runs.push(count);
  if (Boolean(mask[0])) runs.unshift(0);
  return runs.join(" ");
}

export function decodeMask(text: string, width: number, height: number): Uint8Array {
  const out = new Uint8Array(width * height);
  const trimmed = text.trim();
  const runs = trimmed === "" ? [] : trimmed.split(/\s+/).map(Number);
  let pos = 0;
  let value = 0;
  for (const run of runs) {
    if (!Number.isInteger(run) || run < 0) throw new Error("bad RLE run");
    out.fill(value, pos, pos + run);
    pos += run;
    value = value ? 0 : 1;
  }
  if (pos !== width * height) throw new Error(`RLE covers ${pos} pixels, expected ${width * height}`);
  return out;
}
