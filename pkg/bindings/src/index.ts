/**
 * Node surface for the batch-loss score handler.
 *
 * The three-line integration for a JS training loop:
 *
 *   const handler = await bridge.createHandler({ nSamples, alpha: 0.7, ... });
 *   for (const batch of await handler.nextEpochIndices(batchSize, seed)) {
 *     lossToBackprop = await handler.update(meanBatchLoss(batch));
 *   }
 *
 * All scoring, selection, and sampling happens in the native implementation;
 * a handle is not safe for concurrent mutation (serialize calls per handle).
 */

import { Transport, type BridgeOptions } from "./bridge.js";

export { BridgeError, NativeError } from "./errors.js";
export type { BridgeOptions } from "./bridge.js";

export type PolicyOptions =
  | { kind: "none" }
  | { kind: "threshold"; pruneProb: number; rescale?: boolean; annealTail?: number }
  | { kind: "window"; keepFraction: number; progressMode?: "easy-to-hard" | "static" };

export interface HandlerOptions {
  nSamples: number;
  /** EMA decay factor in [0, 1]. */
  alpha: number;
  initPolicy?: "first-observed" | "fixed";
  initValue?: number;
  policy?: PolicyOptions;
  cycleLenEpochs?: number;
  totalEpochs?: number;
  /** Seed for per-cycle keep/prune selections. */
  seed?: number;
}

export interface ScoresSnapshot {
  scores: Float64Array;
  updateCounts: Int32Array;
  initialized: boolean[];
}

function policyParams(policy: PolicyOptions | undefined): Record<string, unknown> {
  if (!policy || policy.kind === "none") return { kind: "none" };
  if (policy.kind === "threshold") {
    return {
      kind: "threshold",
      prune_prob: policy.pruneProb,
      rescale: policy.rescale ?? true,
      anneal_tail: policy.annealTail ?? 0.125,
    };
  }
  return {
    kind: "window",
    keep_fraction: policy.keepFraction,
    progress_mode: policy.progressMode ?? "easy-to-hard",
  };
}

export class HandlerHandle {
  private transport: Transport;
  private handle: number;
  private disposed = false;

  constructor(transport: Transport, handle: number) {
    this.transport = transport;
    this.handle = handle;
  }

  private call(op: string, params: Record<string, unknown> = {}): Promise<Record<string, unknown>> {
    if (this.disposed) return Promise.reject(new Error("handle is disposed"));
    return this.transport.request(op, { handle: this.handle, ...params });
  }

  /**
   * Seeded batch stream for the next epoch (reselecting at cycle boundaries).
   * Each returned batch is queued as the pending input of the matching
   * `update` call, in order.
   */
  async nextEpochIndices(batchSize: number, seed = 0): Promise<number[][]> {
    const res = await this.call("next_epoch_indices", { batch_size: batchSize, seed });
    return res.batches as number[][];
  }

  /** Arm one explicit batch (script-driven streams and external samplers). */
  async installBatch(indices: number[]): Promise<void> {
    await this.call("install_batch", { indices });
  }

  /** Score the pending batch; returns the (possibly rescaled) loss to backpropagate. */
  async update(meanBatchLoss: number): Promise<number> {
    const res = await this.call("update", { mean_loss: meanBatchLoss });
    return res.scaled_loss as number;
  }

  async scoresSnapshot(): Promise<ScoresSnapshot> {
    const res = await this.call("snapshot");
    return {
      scores: Float64Array.from(res.scores as number[]),
      updateCounts: Int32Array.from(res.update_count as number[]),
      initialized: res.initialized as boolean[],
    };
  }

  /** Release the native handler state behind this handle. */
  async dispose(): Promise<void> {
    if (this.disposed) return;
    await this.call("dispose");
    this.disposed = true;
  }
}

export class ScoreBridge {
  private transport: Transport;

  private constructor(transport: Transport) {
    this.transport = transport;
  }

  /** Spawn the native bridge process (requires the Python package installed). */
  static async start(options: BridgeOptions = {}): Promise<ScoreBridge> {
    return new ScoreBridge(await Transport.start(options));
  }

  async createHandler(options: HandlerOptions): Promise<HandlerHandle> {
    const res = await this.transport.request("create", {
      n_samples: options.nSamples,
      alpha: options.alpha,
      init_policy: options.initPolicy ?? "first-observed",
      init_value: options.initValue ?? 0.0,
      policy: policyParams(options.policy),
      cycle_len_epochs: options.cycleLenEpochs ?? 1,
      total_epochs: options.totalEpochs ?? 1,
      seed: options.seed ?? 0,
    });
    return new HandlerHandle(this.transport, res.handle as number);
  }

  /** Number of live handles held by the bridge process. */
  async stats(): Promise<{ liveHandles: number }> {
    const res = await this.transport.request("stats");
    return { liveHandles: res.live_handles as number };
  }

  async close(): Promise<void> {
    await this.transport.close();
  }
}
