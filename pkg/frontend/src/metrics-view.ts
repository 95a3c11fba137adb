// Post-meeting metrics rendering: turn-share bars, the three pairwise
// matrices, and the decorated timeline. Every number shown is read
// directly from the server's metrics document.

import { Draw2D } from "./draw.js";
import { MeetingMetricsData } from "./protocol.js";

export const BAR_FILL = "#6a4fa3";
export const MARK_COLORS: Record<string, string> = {
  interruption: "#c0392b",
  affirmation: "#2e7d32",
  influence: "#1565c0",
};
const MATRIX_KINDS = ["influence", "interruption", "affirmation"] as const;

export interface MetricsViewOptions {
  width: number;
  height: number;
}

export function renderMetrics(metrics: MeetingMetricsData, draw: Draw2D, opts: MetricsViewOptions): void {
  const { width, height } = opts;
  draw.clear(width, height);
  const roster = metrics.participants;
  if (roster.length === 0) {
    draw.text("no participants", 10, 20, 13, "#333333");
    return;
  }

  // turn-share bars (top strip)
  const barTop = 28;
  const rowH = 20;
  draw.text("turn share", 10, 16, 13, "#333333");
  roster.forEach((pid, i) => {
    const share = metrics.per_participant[pid]?.turn_share ?? 0;
    const y = barTop + i * rowH;
    draw.text(pid, 10, y + 12, 11, "#333333");
    draw.rect(70, y, (width * 0.5 - 80) * share, rowH - 6, BAR_FILL);
    draw.text(`${(100 * share).toFixed(1)}%`, 74 + (width * 0.5 - 80) * share, y + 12, 11, "#333333");
  });

  // three pairwise matrices (middle strip)
  const matTop = barTop + roster.length * rowH + 24;
  const cell = Math.min(26, (width - 60) / (3 * (roster.length + 1) + 2) );
  MATRIX_KINDS.forEach((kind, m) => {
    const ox = 10 + m * (cell * (roster.length + 1) + 24);
    draw.text(kind, ox, matTop - 6, 12, MARK_COLORS[kind]);
    roster.forEach((actor, i) => {
      roster.forEach((other, j) => {
        const count = metrics.pairwise[kind]?.[actor]?.[other] ?? 0;
        const x = ox + (j + 1) * cell;
        const y = matTop + i * cell;
        draw.rect(x, y, cell - 2, cell - 2, count > 0 ? "#ece5f7" : "#fafafa");
        draw.text(String(count), x + cell / 2 - 1, y + cell / 2 + 3, 10, "#333333", "center");
      });
      draw.text(actor, ox, matTop + i * cell + cell / 2 + 3, 10, "#333333");
    });
  });

  // decorated timeline (bottom strip)
  const tlTop = matTop + roster.length * cell + 30;
  draw.text("timeline", 10, tlTop - 6, 12, "#333333");
  const span = Math.max(1, metrics.duration_ms);
  const laneH = Math.max(10, Math.min(18, (height - tlTop - 10) / Math.max(1, roster.length)));
  const toX = (t: number) => 60 + ((width - 70) * t) / span;
  roster.forEach((pid, i) => {
    const y = tlTop + i * laneH;
    draw.text(pid, 10, y + laneH / 2 + 3, 10, "#333333");
    draw.line(60, y + laneH / 2, width - 10, y + laneH / 2, 1, "#dddddd");
  });
  for (const entry of metrics.timeline) {
    const lane = roster.indexOf(entry.participant);
    if (lane < 0) continue;
    const y = tlTop + lane * laneH;
    draw.rect(
      toX(entry.start_ms), y + 2,
      Math.max(1, toX(entry.end_ms) - toX(entry.start_ms)), laneH - 6,
      entry.is_turn ? BAR_FILL : "#b7a8d6",
    );
    for (const mark of entry.marks) {
      draw.circle(toX(mark.t_ms), y + 2, 3, MARK_COLORS[mark.kind] ?? "#333333");
    }
  }
}
