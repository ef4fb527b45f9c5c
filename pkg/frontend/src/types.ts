export interface SectionDoc {
  topic: string;
  fact_ids: string[];
}

export interface StructureDoc {
  title: string;
  intro_text: string;
  sections: SectionDoc[];
}

export interface FactDoc {
  idea: { id: string; fact_type: string; content: string; significance: number };
  sql: string;
  chart_ref: string;
  statement: string;
  causal_qas: { question: string; answer: string }[];
}

export interface SheetDoc {
  id: string;
  dataset_name: string;
  seed: number;
  revision: number;
  structure: StructureDoc;
  facts: Record<string, FactDoc>;
  user_request: string | null;
}

export interface DatasetInfo {
  name: string;
  rows: number;
  columns: { name: string; data_class: string }[];
}

export interface JobStatus {
  state: "running" | "done" | "failed";
  sheet_id?: string;
  error?: string;
}

export type EditOp =
  | { op: "add_section"; topic: string; index?: number }
  | { op: "delete_section"; topic: string }
  | { op: "move_section"; topic: string; index: number }
  | { op: "rename_section"; topic: string; new_topic: string }
  | { op: "delete_fact"; fact_id: string }
  | { op: "move_fact"; fact_id: string; topic: string; index?: number }
  | { op: "reorder_fact"; fact_id: string; index: number }
  | {
      op: "edit_text";
      target: "title" | "intro" | "statement";
      text: string;
      fact_id?: string;
    };
