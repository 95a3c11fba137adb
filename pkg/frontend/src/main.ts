// Browser entry point. Query parameters pick the server, meeting, and
// participant, e.g.:
//   index.html?server=ws://127.0.0.1:8747/ws&meeting=m1&participant=alice
// Hold the spacebar (or press the button) to speak.

import { CanvasDraw } from "./draw.js";
import { renderMediator, seatTooltip } from "./mediator-view.js";
import { renderMetrics } from "./metrics-view.js";
import { rosterLayout } from "./layout.js";
import { UiSession } from "./session.js";

function param(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function start(): void {
  const serverUrl = param("server", `ws://${window.location.hostname}:8747/ws`);
  const meetingId = param("meeting", "demo");
  const participantId = param("participant", `guest-${Math.floor(Math.random() * 1000)}`);
  const timeScale = Number(param("scale", "1"));

  const gaugeCanvas = el<HTMLCanvasElement>("gauge");
  const metricsCanvas = el<HTMLCanvasElement>("metrics");
  const statusLine = el<HTMLDivElement>("status");
  const banner = el<HTMLDivElement>("banner");
  const tooltip = el<HTMLDivElement>("tooltip");
  const talkButton = el<HTMLButtonElement>("talk");

  const gaugeDraw = new CanvasDraw(gaugeCanvas.getContext("2d")!);
  const metricsDraw = new CanvasDraw(metricsCanvas.getContext("2d")!);

  const session = new UiSession({
    url: serverUrl,
    meetingId,
    participantId,
    timeScale,
    socketFactory: (url) => new WebSocket(url),
    onChange: (state) => {
      statusLine.textContent =
        `${state.status} | meeting ${meetingId} | you are ${participantId}` +
        (state.speaking ? " | speaking" : "");
      banner.textContent = state.lastError ?? "";
      banner.style.display = state.lastError ? "block" : "none";
      if (state.snapshot) {
        renderMediator(state.snapshot, gaugeDraw, {
          width: gaugeCanvas.width,
          height: gaugeCanvas.height,
          localParticipant: participantId,
        });
      }
      if (state.metrics) {
        renderMetrics(state.metrics, metricsDraw, {
          width: metricsCanvas.width,
          height: metricsCanvas.height,
        });
      }
    },
  });

  // hold-to-speak: pointer on the button, spacebar anywhere
  talkButton.addEventListener("pointerdown", () => session.holdToSpeak(true));
  talkButton.addEventListener("pointerup", () => session.holdToSpeak(false));
  talkButton.addEventListener("pointerleave", () => session.holdToSpeak(false));
  window.addEventListener("keydown", (ev) => {
    if (ev.code === "Space") session.holdToSpeak(true);
  });
  window.addEventListener("keyup", (ev) => {
    if (ev.code === "Space") session.holdToSpeak(false);
  });
  el<HTMLButtonElement>("finalize").addEventListener("click", () => session.finalize());

  // hover tooltips over gauge seats
  gaugeCanvas.addEventListener("mousemove", (ev) => {
    const snap = session.state.snapshot;
    if (!snap) return;
    const rect = gaugeCanvas.getBoundingClientRect();
    const mx = ev.clientX - rect.left;
    const my = ev.clientY - rect.top;
    const cx = gaugeCanvas.width / 2;
    const cy = gaugeCanvas.height / 2;
    const radius = 0.38 * Math.min(gaugeCanvas.width, gaugeCanvas.height);
    const roster = Object.keys(snap.counts);
    const seats = rosterLayout(roster);
    let hit: string | null = null;
    for (const pid of roster) {
      const seat = seats.get(pid)!;
      const dx = mx - (cx + seat.x * radius);
      const dy = my - (cy - seat.y * radius);
      if (dx * dx + dy * dy <= 18 * 18) hit = pid;
    }
    if (hit) {
      tooltip.textContent = seatTooltip(snap, hit);
      tooltip.style.display = "block";
      tooltip.style.left = `${ev.clientX + 12}px`;
      tooltip.style.top = `${ev.clientY + 12}px`;
    } else {
      tooltip.style.display = "none";
    }
  });
}

window.addEventListener("load", start);
