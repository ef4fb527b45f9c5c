import type { DatasetInfo, EditOp, JobStatus, SheetDoc } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
    public detail: Record<string, unknown> = {},
  ) {
    super(message);
  }
}

async function fail(res: Response): Promise<never> {
  let detail: Record<string, unknown> = {};
  let message = `${res.status}`;
  try {
    detail = (await res.json()) as Record<string, unknown>;
    if (typeof detail.error === "string") message = detail.error;
  } catch {
    /* non-JSON body; keep the status text */
  }
  throw new ApiError(res.status, message, detail);
}

/** Thin typed wrapper over the sheet service; every call maps 1:1 to a route. */
export class ApiClient {
  constructor(
    private base: string = "",
    private fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async json<T>(url: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.base + url, init);
    if (!res.ok) await fail(res);
    return (await res.json()) as T;
  }

  uploadDataset(file: Blob, filename: string, name?: string): Promise<DatasetInfo> {
    const form = new FormData();
    form.append("file", file, filename);
    if (name) form.append("name", name);
    return this.json("/datasets", { method: "POST", body: form });
  }

  startGeneration(dataset: string, request?: string, seed?: number): Promise<{ sheet_id: string; state: string }> {
    return this.json("/sheets", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ dataset, request, seed }),
    });
  }

  status(sheetId: string): Promise<JobStatus> {
    return this.json(`/sheets/${sheetId}/status`);
  }

  getSheet(sheetId: string): Promise<SheetDoc> {
    return this.json(`/sheets/${sheetId}`);
  }

  patchSheet(sheetId: string, revision: number, ops: EditOp[]): Promise<SheetDoc> {
    return this.json(`/sheets/${sheetId}`, {
      method: "PATCH",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ revision, ops }),
    });
  }

  addFact(sheetId: string, request: string): Promise<{ fact_id: string; revision: number; sheet: SheetDoc }> {
    return this.json(`/sheets/${sheetId}/facts`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ request }),
    });
  }

  async exportSheet(sheetId: string, format: "svg" | "pdf"): Promise<Blob> {
    const res = await this.fetchImpl(
      `${this.base}/sheets/${sheetId}/export?format=${format}`,
    );
    if (!res.ok) await fail(res);
    return res.blob();
  }

  async pollUntilDone(sheetId: string, intervalMs = 250, timeoutMs = 30000): Promise<JobStatus> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const job = await this.status(sheetId);
      if (job.state !== "running") return job;
      if (Date.now() > deadline) throw new ApiError(0, "generation timed out");
      await new Promise((r) => setTimeout(r, intervalMs));
    }
  }
}
