// Wire types mirroring the scoring service's JSON documents (GET /schema).

export type Stage = "W" | "N1" | "N2" | "N3" | "R";

export const STAGE_ORDER: Stage[] = ["W", "N1", "N2", "N3", "R"];

export interface SleepReport {
  minutes_per_stage: Record<Stage, number>;
  sleep_efficiency: number;
  fragmentation_index: number;
  total_recording_min: number;
  total_sleep_min: number;
  no_sleep: boolean;
  fragmentation_definition: string;
}

export interface CaseResult {
  stages: Stage[];
  confidence: number[];
  probabilities: number[][];
  sleep_report: SleepReport;
  expert_stages?: Stage[];
  disagreements?: number[];
}

export interface CaseDocument {
  case_id: string;
  filename: string;
  state: "pending" | "running" | "done" | "failed";
  epoch_count: number;
  epochs_done: number;
  model: string | null;
  error: string | null;
  has_expert: boolean;
  result?: CaseResult;
}

export interface EpochDetail {
  case_id: string;
  epoch: number;
  channels: string[];
  sample_rate_hz: number;
  waveform_b64: string[];
  spectrogram_db: number[][];
  stage_expert: Stage | null;
  stage_pred: Stage | null;
  probs: number[] | null;
}

export interface ModelInfo {
  name: string;
  family?: string;
  representation?: string;
  lookback?: number;
}
