// Gauge rendering: participant seats, grey spokes whose thickness shows
// each participant's share of windowed turns, and a central node whose
// position comes straight off the snapshot and whose fill darkens with
// engagement.

import { Draw2D } from "./draw.js";
import { rosterLayout } from "./layout.js";
import { MmSnapshot } from "./protocol.js";

// Style contract: engagement level 0 and 1 map to exactly these fills.
export const ENGAGEMENT_LIGHT = "#e8dff5";
export const ENGAGEMENT_DARK = "#3b1f6e";

export const SPOKE_COLOR = "#9b9b9b";
export const SEAT_FILL = "#f2f2f2";
export const SEAT_STROKE = "#555555";
export const LOCAL_SEAT_STROKE = "#2e7d32";

export function mixHex(a: string, b: string, t: number): string {
  const pa = [1, 3, 5].map((i) => parseInt(a.slice(i, i + 2), 16));
  const pb = [1, 3, 5].map((i) => parseInt(b.slice(i, i + 2), 16));
  const mixed = pa.map((va, i) => Math.round(va + (pb[i] - va) * t));
  return "#" + mixed.map((v) => v.toString(16).padStart(2, "0")).join("");
}

export function engagementFill(level: number): string {
  const t = Math.max(0, Math.min(1, level));
  return mixHex(ENGAGEMENT_LIGHT, ENGAGEMENT_DARK, t);
}

export interface MediatorViewOptions {
  width: number;
  height: number;
  localParticipant?: string;
}

export function renderMediator(snapshot: MmSnapshot, draw: Draw2D, opts: MediatorViewOptions): void {
  const { width, height } = opts;
  draw.clear(width, height);
  const roster = Object.keys(snapshot.counts);
  if (roster.length === 0) return;
  const cx = width / 2;
  const cy = height / 2;
  const radius = 0.38 * Math.min(width, height);
  const seats = rosterLayout(roster);

  const px = (x: number) => cx + x * radius;
  const py = (y: number) => cy - y * radius; // canvas y grows downward

  const nodeX = px(snapshot.node[0]);
  const nodeY = py(snapshot.node[1]);

  for (const pid of roster) {
    const seat = seats.get(pid)!;
    const weight = snapshot.spokes[pid] ?? 0;
    draw.line(nodeX, nodeY, px(seat.x), py(seat.y), 1 + 14 * weight, SPOKE_COLOR);
  }
  for (const pid of roster) {
    const seat = seats.get(pid)!;
    const stroke = pid === opts.localParticipant ? LOCAL_SEAT_STROKE : SEAT_STROKE;
    draw.circle(px(seat.x), py(seat.y), 16, SEAT_FILL, stroke);
    draw.text(pid, px(seat.x), py(seat.y) - 22, 12, "#333333", "center");
    draw.text(String(snapshot.counts[pid] ?? 0), px(seat.x), py(seat.y) + 4, 11, "#333333", "center");
  }
  draw.circle(nodeX, nodeY, 20, engagementFill(snapshot.level));
  draw.text(`turns in window: ${snapshot.engagement}`, 10, height - 10, 12, "#333333");
}

/** Hover readout for a seat (windowed count and spoke share, verbatim). */
export function seatTooltip(snapshot: MmSnapshot, pid: string): string {
  const count = snapshot.counts[pid] ?? 0;
  const spoke = snapshot.spokes[pid] ?? 0;
  return `${pid}: ${count} turns in window, ${(100 * spoke).toFixed(0)}% of turns`;
}
