/** Deterministic PRNG and batch scripting shared by the binding tests. */

export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** k distinct indices from [0, n) via partial Fisher-Yates. */
export function sampleWithoutReplacement(rand: () => number, n: number, k: number, scratch: number[]): number[] {
  for (let i = 0; i < n; i++) scratch[i] = i;
  const out = new Array<number>(k);
  for (let i = 0; i < k; i++) {
    const j = i + Math.floor(rand() * (n - i));
    const tmp = scratch[i];
    scratch[i] = scratch[j];
    scratch[j] = tmp;
    out[i] = scratch[i];
  }
  return out;
}

export interface ScriptedStep {
  indices: number[];
  meanLoss: number;
}

export function scriptedStream(steps: number, nSamples: number, batchSize: number, seed: number): ScriptedStep[] {
  const rand = mulberry32(seed);
  const scratch = new Array<number>(nSamples);
  const out: ScriptedStep[] = [];
  for (let s = 0; s < steps; s++) {
    out.push({
      indices: sampleWithoutReplacement(rand, nSamples, batchSize, scratch),
      meanLoss: rand() * 10,
    });
  }
  return out;
}
