/** Wire types for the taskforge JSON API. */

export interface LabelPreview {
  entity: string;
  t_st: number;
  t_ed: number;
  label: number | string | null;
}

export interface ModelReport {
  task_id: string;
  kind: "regression" | "classification";
  metric_name: "r2" | "accuracy";
  train_size: number;
  validation_size: number;
  metric_value: number | null;
  baseline_value: number | null;
  note?: string | null;
}

export interface TaskView {
  task_id: string;
  entity: string | null;
  filter_op: string;
  filter_col: string | null;
  epsilon: number | string | null;
  agg_op: string;
  agg_col: string | null;
  window_seconds: number;
  kind: "regression" | "classification";
  description: string;
  train_size: number;
  validation_size: number;
  valid: boolean;
  preview: LabelPreview[];
  report: ModelReport | null;
}

export interface CreateProjectResponse {
  project_id: string;
  pool_size: number;
  reused: boolean;
}

export interface BatchResponse {
  session_id: string;
  iteration: number;
  tasks: TaskView[];
  terminal: boolean;
}

export interface FeedbackAck {
  session_id: string;
  iteration: number;
  accepted: number;
  replayed: boolean;
}

export interface HistoryIteration {
  iteration: number;
  task_ids: string[];
  ratings: Record<string, number>;
}

export interface HistoryResponse {
  session_id: string;
  iterations: HistoryIteration[];
  open_batch: { iteration: number; task_ids: string[] } | null;
}

export interface RatingSubmission {
  task_id: string;
  rating: number;
}
