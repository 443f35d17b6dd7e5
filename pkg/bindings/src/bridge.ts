/**
 * Subprocess transport: one JSON request per line on stdin, one response per
 * line on stdout, matched by id. The scoring implementation lives entirely in
 * the spawned process; this side only marshals scalars and index lists.
 */

import { spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { createInterface, type Interface } from "node:readline";
import { fileURLToPath } from "node:url";

import { BridgeError, NativeError } from "./errors.js";

export interface BridgeOptions {
  /** Python executable; defaults to $BATCHSCORE_PYTHON or "python3". */
  pythonPath?: string;
  /** Override the bridge script location (mostly for tests). */
  scriptPath?: string;
}

interface Pending {
  resolve: (result: Record<string, unknown>) => void;
  reject: (err: Error) => void;
}

const DEFAULT_SCRIPT = fileURLToPath(new URL("../python/handler_bridge.py", import.meta.url));

export class Transport {
  private child: ChildProcessWithoutNullStreams;
  private lines: Interface;
  private pending = new Map<number, Pending>();
  private nextId = 1;
  private closed = false;
  private stderrTail = "";

  private constructor(child: ChildProcessWithoutNullStreams) {
    this.child = child;
    this.lines = createInterface({ input: child.stdout });
    this.lines.on("line", (line) => this.onLine(line));
    child.stderr.on("data", (chunk: Buffer) => {
      this.stderrTail = (this.stderrTail + chunk.toString()).slice(-4000);
    });
    child.on("exit", () => this.failAll(new BridgeError(`bridge process exited: ${this.stderrTail.trim()}`)));
  }

  static start(options: BridgeOptions = {}): Promise<Transport> {
    const python = options.pythonPath ?? process.env.BATCHSCORE_PYTHON ?? "python3";
    const script = options.scriptPath ?? DEFAULT_SCRIPT;
    const child = spawn(python, [script], { stdio: ["pipe", "pipe", "pipe"] });
    const transport = new Transport(child);
    return new Promise((resolve, reject) => {
      const onReady = (line: string) => {
        try {
          const msg = JSON.parse(line) as { ready?: boolean };
          if (msg.ready) {
            resolve(transport);
          } else {
            reject(new BridgeError(`unexpected handshake: ${line}`));
          }
        } catch {
          reject(new BridgeError(`unparseable handshake: ${line}`));
        }
      };
      transport.lines.once("line", onReady);
      child.once("error", (err) => reject(new BridgeError(`failed to spawn ${python}: ${err.message}`)));
      child.once("exit", (code) =>
        reject(new BridgeError(`bridge exited during startup (code ${code}): ${transport.stderrTail.trim()}`)),
      );
    });
  }

  private onLine(line: string): void {
    let msg: { id?: number; ok?: boolean; result?: Record<string, unknown>; error?: { type: string; message: string } };
    try {
      msg = JSON.parse(line);
    } catch {
      this.failAll(new BridgeError(`unparseable bridge response: ${line}`));
      return;
    }
    if (msg.id === undefined || msg.id === null) return; // handshake or stray line
    const pending = this.pending.get(msg.id);
    if (!pending) return;
    this.pending.delete(msg.id);
    if (msg.ok) {
      pending.resolve(msg.result ?? {});
    } else {
      const err = msg.error ?? { type: "Unknown", message: "unknown bridge error" };
      pending.reject(new NativeError(err.type, err.message));
    }
  }

  private failAll(err: Error): void {
    if (this.closed) return;
    this.closed = true;
    for (const pending of this.pending.values()) pending.reject(err);
    this.pending.clear();
  }

  request(op: string, params: Record<string, unknown> = {}): Promise<Record<string, unknown>> {
    if (this.closed) return Promise.reject(new BridgeError("bridge is closed"));
    const id = this.nextId++;
    const payload = JSON.stringify({ id, op, ...params });
    return new Promise((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
      this.child.stdin.write(payload + "\n", (err) => {
        if (err) {
          this.pending.delete(id);
          reject(new BridgeError(`write failed: ${err.message}`));
        }
      });
    });
  }

  async close(): Promise<void> {
    if (this.closed) return;
    try {
      await this.request("shutdown");
    } catch {
      // already dying; fall through to kill
    }
    this.closed = true;
    this.child.kill();
  }
}
