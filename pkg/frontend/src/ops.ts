import type { EditOp, SheetDoc } from "./types.js";

export class EditValidationError extends Error {}

function require(cond: boolean, message: string): asserts cond {
  if (!cond) throw new EditValidationError(message);
}

function sectionIndex(sheet: SheetDoc, topic: string): number {
  const i = sheet.structure.sections.findIndex((s) => s.topic === topic);
  require(i >= 0, `no section named '${topic}'`);
  return i;
}

function factLocation(sheet: SheetDoc, factId: string): [number, number] {
  for (let i = 0; i < sheet.structure.sections.length; i++) {
    const j = sheet.structure.sections[i]!.fact_ids.indexOf(factId);
    if (j >= 0) return [i, j];
  }
  throw new EditValidationError(`no fact with id '${factId}'`);
}

/**
 * Apply one edit operation to a deep copy of the sheet, mirroring the
 * server's validation rules so the optimistic state matches a refetch.
 * The server bumps the revision once per accepted batch; `applyOps` does
 * the same at the end.
 */
function applyOne(sheet: SheetDoc, op: EditOp): void {
  const sections = sheet.structure.sections;
  switch (op.op) {
    case "add_section": {
      const topic = op.topic.trim();
      require(topic.length > 0, "section topic must be non-empty");
      require(sections.every((s) => s.topic !== topic), `section '${topic}' already exists`);
      const index = op.index ?? sections.length;
      require(Number.isInteger(index) && index >= 1 && index <= sections.length,
        "section index must be at least 1 (Introduction stays first)");
      sections.splice(index, 0, { topic, fact_ids: [] });
      return;
    }
    case "delete_section": {
      const i = sectionIndex(sheet, op.topic);
      require(i !== 0, "the Introduction section cannot be deleted");
      for (const fid of sections[i]!.fact_ids) delete sheet.facts[fid];
      sections.splice(i, 1);
      return;
    }
    case "move_section": {
      const i = sectionIndex(sheet, op.topic);
      require(i !== 0, "the Introduction section cannot be moved");
      require(Number.isInteger(op.index) && op.index >= 1 && op.index < sections.length,
        "target index must keep the Introduction first");
      const [s] = sections.splice(i, 1);
      sections.splice(op.index, 0, s!);
      return;
    }
    case "rename_section": {
      const i = sectionIndex(sheet, op.topic);
      require(i !== 0, "the Introduction section cannot be renamed");
      const next = op.new_topic.trim();
      require(next.length > 0, "new topic must be non-empty");
      require(sections.every((s) => s.topic !== next), `section '${next}' already exists`);
      sections[i]!.topic = next;
      return;
    }
    case "delete_fact": {
      const [si, fi] = factLocation(sheet, op.fact_id);
      sections[si]!.fact_ids.splice(fi, 1);
      delete sheet.facts[op.fact_id];
      return;
    }
    case "move_fact": {
      const [si, fi] = factLocation(sheet, op.fact_id);
      const ti = sectionIndex(sheet, op.topic);
      require(ti !== 0, "facts cannot be placed in the Introduction");
      sections[si]!.fact_ids.splice(fi, 1);
      const dst = sections[ti]!.fact_ids;
      const index = op.index ?? dst.length;
      require(Number.isInteger(index) && index >= 0 && index <= dst.length,
        "fact index out of range");
      dst.splice(index, 0, op.fact_id);
      return;
    }
    case "reorder_fact": {
      const [si, fi] = factLocation(sheet, op.fact_id);
      const ids = sections[si]!.fact_ids;
      require(Number.isInteger(op.index) && op.index >= 0 && op.index < ids.length,
        "fact index out of range");
      const [fid] = ids.splice(fi, 1);
      ids.splice(op.index, 0, fid!);
      return;
    }
    case "edit_text": {
      const text = op.text.trim();
      require(text.length > 0, "replacement text must be non-empty");
      if (op.target === "title") sheet.structure.title = text;
      else if (op.target === "intro") sheet.structure.intro_text = text;
      else {
        const fid = op.fact_id ?? "";
        require(fid in sheet.facts, `no fact with id '${fid}'`);
        sheet.facts[fid]!.statement = text;
      }
      return;
    }
  }
}

export function applyOps(sheet: SheetDoc, ops: EditOp[]): SheetDoc {
  require(ops.length > 0, "empty edit batch");
  const draft: SheetDoc = structuredClone(sheet);
  for (const op of ops) applyOne(draft, op);
  draft.revision = sheet.revision + 1;
  return draft;
}
