// Wire types, mirroring the service's JSON surface.

export interface SegmentWire {
  start_s: number;
  end_s: number;
}

export interface CutListWire {
  session: string;
  student: string;
  strategy: string;
  gap_s: number;
  segments: SegmentWire[];
  total_playback_s: number;
}

export interface ManifestEntryWire {
  start_s: number;
  end_s: number;
  leading_gap: boolean;
}

export interface ManifestWire {
  gap_s: number;
  total_playback_s: number;
  entries: ManifestEntryWire[];
}

export interface SummaryWire {
  cutlist: CutListWire;
  manifest: ManifestWire;
  recording_uri: string | null;
  duration_s: number;
}

export interface SessionWire {
  session_id: string;
  course_code: string;
  recording_start_ms: number;
  recording_end_ms: number | null;
  recording_uri: string | null;
  state: "open" | "closed";
  duration_s: number | null;
}

export interface SessionListWire {
  course_code: string;
  title: string;
  sessions: SessionWire[];
}

export interface MatrixWire {
  minutes: number[];
  participants: string[];
  values: (number | null)[][]; // values[minute][participant]
}

export interface ClassViewWire {
  session: string;
  duration_s: number;
  participant_count: number;
  matrix: MatrixWire;
}

export interface ErrorWire {
  error_code: string;
  message: string;
}

export const STRATEGIES = [
  "full",
  "all_i_missed",
  "fixed_5min",
  "fixed_2min",
  "fixed_30s",
  "peer_informed",
  "replay_heat",
] as const;

export type Strategy = (typeof STRATEGIES)[number];

export const STRATEGY_LABELS: Record<Strategy, string> = {
  full: "Full recording",
  all_i_missed: "All I missed",
  fixed_5min: "5-minute segments",
  fixed_2min: "2-minute segments",
  fixed_30s: "30-second segments",
  peer_informed: "Missed while class was attentive",
  replay_heat: "Replayed by classmates",
};
