import { ApiClient } from "./api.js";
import { EditorStore } from "./store.js";
import { renderSheet } from "./view.js";

/** Wire the editor into a host element; browser entry point. */
export function mount(root: HTMLElement, base = ""): EditorStore {
  const api = new ApiClient(base);
  const store = new EditorStore(api);
  const toast = document.createElement("div");
  toast.className = "toast";
  toast.hidden = true;
  root.after(toast);

  store.onError((message) => {
    toast.textContent = message;
    toast.hidden = false;
    setTimeout(() => (toast.hidden = true), 4000);
  });

  store.subscribe((sheet) => {
    root.innerHTML = renderSheet(sheet, base);
    wire(root, store);
  });

  return store;
}

function wire(root: HTMLElement, store: EditorStore): void {
  root.querySelectorAll<HTMLElement>("[data-action=delete-fact]").forEach((el) =>
    el.addEventListener("click", () => {
      void store.edit([{ op: "delete_fact", fact_id: el.dataset.factId! }]).catch(() => {});
    }),
  );
  root.querySelectorAll<HTMLElement>("[data-action=delete-section]").forEach((el) =>
    el.addEventListener("click", () => {
      void store.edit([{ op: "delete_section", topic: el.dataset.topic! }]).catch(() => {});
    }),
  );
  root.querySelectorAll<HTMLElement>(".fact[draggable]").forEach((el) =>
    el.addEventListener("dragstart", (ev) => {
      (ev as DragEvent).dataTransfer?.setData("text/fact-id", el.dataset.factId!);
    }),
  );
  root.querySelectorAll<HTMLElement>("section").forEach((el) => {
    el.addEventListener("dragover", (ev) => {
      if (store.canDropFact(el.dataset.topic!)) ev.preventDefault();
    });
    el.addEventListener("drop", (ev) => {
      const fid = (ev as DragEvent).dataTransfer?.getData("text/fact-id");
      if (fid) void store.moveFact(fid, el.dataset.topic!).catch(() => {});
    });
  });
  const form = root.querySelector<HTMLFormElement>("form[data-role=request-fact]");
  if (form) {
    const input = form.querySelector<HTMLInputElement>("input[name=request]")!;
    const submit = form.querySelector<HTMLButtonElement>("button[type=submit]")!;
    input.addEventListener("input", () => {
      submit.disabled = input.value.trim().length === 0;
    });
    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      if (input.value.trim()) void store.requestFact(input.value).catch(() => {});
    });
  }
}

export { ApiClient, EditorStore, renderSheet };
export { applyOps } from "./ops.js";
export type { EditOp, SheetDoc } from "./types.js";
