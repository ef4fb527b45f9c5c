import { ApiClient, ApiError } from "./api.js";
import { applyOps, EditValidationError } from "./ops.js";
import type { EditOp, SheetDoc } from "./types.js";

export type Listener = (sheet: SheetDoc) => void;
export type ErrorListener = (message: string) => void;

interface PendingBatch {
  ops: EditOp[];
  resolve: () => void;
  reject: (err: unknown) => void;
}

/**
 * Optimistic sheet state over the HTTP API.
 *
 * Edits are applied locally at once and queued; exactly one PATCH is in
 * flight at a time, each carrying the last server-confirmed revision. A 409
 * triggers a refetch and one rebase-and-retry of the pending batches; a
 * validation rejection drops the offending batch and rebuilds the local
 * state from the server, so the UI can never drift from a refetch.
 */
export class EditorStore {
  sheet: SheetDoc | null = null;
  private serverSheet: SheetDoc | null = null;
  private queue: PendingBatch[] = [];
  private pumping = false;
  private listeners: Listener[] = [];
  private errorListeners: ErrorListener[] = [];

  constructor(private api: ApiClient) {}

  subscribe(fn: Listener): void {
    this.listeners.push(fn);
  }

  onError(fn: ErrorListener): void {
    this.errorListeners.push(fn);
  }

  private emit(): void {
    if (this.sheet) for (const fn of this.listeners) fn(this.sheet);
  }

  private emitError(message: string): void {
    for (const fn of this.errorListeners) fn(message);
  }

  async load(sheetId: string): Promise<SheetDoc> {
    const doc = await this.api.getSheet(sheetId);
    this.serverSheet = doc;
    this.sheet = structuredClone(doc);
    this.emit();
    return doc;
  }

  /** Apply a batch optimistically; resolves once the server confirms it. */
  edit(ops: EditOp[]): Promise<void> {
    if (!this.sheet) return Promise.reject(new Error("no sheet loaded"));
    try {
      this.sheet = applyOps(this.sheet, ops); // rejects before queueing if invalid
    } catch (err) {
      return Promise.reject(err);
    }
    this.emit();
    return new Promise((resolve, reject) => {
      this.queue.push({ ops, resolve, reject });
      void this.pump();
    });
  }

  /** True while confirmed server state lags the optimistic state. */
  get dirty(): boolean {
    return this.queue.length > 0 || this.pumping;
  }

  async flush(): Promise<void> {
    while (this.dirty) await new Promise((r) => setTimeout(r, 5));
  }

  private rebuildOptimistic(): void {
    let doc = structuredClone(this.serverSheet!);
    for (const batch of this.queue) doc = applyOps(doc, batch.ops);
    this.sheet = doc;
    this.emit();
  }

  private async pump(): Promise<void> {
    if (this.pumping) return;
    this.pumping = true;
    try {
      while (this.queue.length > 0) {
        const batch = this.queue[0]!;
        try {
          this.serverSheet = await this.api.patchSheet(
            this.serverSheet!.id,
            this.serverSheet!.revision,
            batch.ops,
          );
          this.queue.shift();
          batch.resolve();
        } catch (err) {
          if (err instanceof ApiError && err.status === 409) {
            // someone else moved the sheet; rebase pending batches on it
            this.serverSheet = await this.api.getSheet(this.serverSheet!.id);
            try {
              this.rebuildOptimistic();
              continue; // retry the same batch at the fresh revision
            } catch (rebaseErr) {
              this.failAll(rebaseErr);
              return;
            }
          }
          this.queue.shift();
          batch.reject(err);
          this.emitError(err instanceof Error ? err.message : String(err));
          this.rebuildOptimistic();
        }
      }
    } finally {
      this.pumping = false;
    }
  }

  private failAll(err: unknown): void {
    const pending = this.queue.splice(0);
    for (const b of pending) b.reject(err);
    this.emitError(err instanceof Error ? err.message : String(err));
    this.sheet = structuredClone(this.serverSheet!);
    this.emit();
  }

  /** Whether a fact may be dropped at this section (Introduction is pinned). */
  canDropFact(topic: string): boolean {
    return topic !== "Introduction";
  }

  moveFact(factId: string, topic: string, index?: number): Promise<void> {
    if (!this.canDropFact(topic)) {
      const message = "facts cannot be placed in the Introduction";
      this.emitError(message);
      return Promise.reject(new EditValidationError(message));
    }
    return this.edit([{ op: "move_fact", fact_id: factId, topic, index }]);
  }

  async requestFact(text: string): Promise<string> {
    const request = text.trim();
    if (!request) throw new EditValidationError("request must be non-empty");
    if (!this.sheet) throw new Error("no sheet loaded");
    await this.flush(); // the server mutates the sheet; settle edits first
    try {
      const res = await this.api.addFact(this.sheet.id, request);
      this.serverSheet = res.sheet;
      this.sheet = structuredClone(res.sheet);
      this.emit();
      return res.fact_id;
    } catch (err) {
      this.emitError(err instanceof Error ? err.message : String(err));
      throw err;
    }
  }
}
