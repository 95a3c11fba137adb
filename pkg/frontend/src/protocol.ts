// Frame types shared with the meeting server. One JSON object per
// WebSocket text frame; the UI never invents metric numbers, it only
// renders what these frames carry.

export interface MmSnapshot {
  type: "mm";
  meeting: string;
  t_ms: number;
  counts: Record<string, number>;
  engagement: number;
  level: number;
  node: [number, number];
  spokes: Record<string, number>;
}

export interface AckFrame {
  type: "ack";
  op: string;
  meeting?: string;
  participant?: string;
  roster?: string[];
  seq?: number;
}

export interface ErrFrame {
  type: "err";
  code: string;
  detail: string;
}

export interface ParticipantStats {
  turn_count: number;
  speech_ms: number;
  turn_share: number;
  time_share: number;
}

export interface TimelineMark {
  kind: string;
  role: "actor" | "counterpart";
  other: string;
  t_ms: number;
}

export interface TimelineEntry {
  participant: string;
  start_ms: number;
  end_ms: number;
  is_turn: boolean;
  marks: TimelineMark[];
}

export interface MeetingMetricsData {
  meeting_id: string;
  started_at: number;
  duration_ms: number;
  participants: string[];
  per_participant: Record<string, ParticipantStats>;
  pairwise: Record<string, Record<string, Record<string, number>>>;
  timeline: TimelineEntry[];
}

export interface MetricsFrame {
  type: "metrics";
  meeting: string;
  data: MeetingMetricsData;
}

export type ServerFrame = MmSnapshot | AckFrame | ErrFrame | MetricsFrame;

export function parseServerFrame(raw: string): ServerFrame | null {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const type = (obj as { type?: unknown }).type;
  if (type === "mm" || type === "ack" || type === "err" || type === "metrics") {
    return obj as ServerFrame;
  }
  return null;
}

export interface VadFrame {
  type: "vad";
  meeting: string;
  participant: string;
  t_ms: number;
  speaking: boolean;
}
