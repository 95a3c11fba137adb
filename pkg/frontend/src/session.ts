// Live session: joins a meeting over the server's WebSocket endpoint,
// tracks the latest gauge snapshot, emits hold-to-speak voice-activity
// frames on a meeting-relative clock, and survives server restarts by
// reopening + rejoining with backoff.

import {
  MeetingMetricsData,
  MmSnapshot,
  ServerFrame,
  VadFrame,
  parseServerFrame,
} from "./protocol.js";

// Minimal subset of the WebSocket API the session needs; satisfied by the
// browser WebSocket and by the `ws` package in tests. Handler parameters
// are typed loosely so both event models fit.
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  onclose: ((ev: any) => void) | null;
  onerror: ((ev: any) => void) | null;
  readyState: number;
}

export type SocketFactory = (url: string) => SocketLike;

export type ConnectionStatus = "connecting" | "joined" | "reconnecting" | "closed";

export interface SessionState {
  status: ConnectionStatus;
  roster: string[];
  snapshot: MmSnapshot | null;
  metrics: MeetingMetricsData | null;
  speaking: boolean;
  lastError: string | null;
}

export interface SessionOptions {
  url: string; // ws://host:port/ws
  meetingId: string;
  participantId: string;
  socketFactory: SocketFactory;
  now?: () => number; // wall clock, ms
  timeScale?: number; // meeting-time speedup mirrored from the server
  backoffMs?: number[]; // reconnect schedule
  onChange?: (state: SessionState) => void;
}

const OPEN = 1; // WebSocket.OPEN

export class UiSession {
  readonly state: SessionState = {
    status: "connecting",
    roster: [],
    snapshot: null,
    metrics: null,
    speaking: false,
    lastError: null,
  };

  private socket: SocketLike | null = null;
  private queued: VadFrame[] = [];
  private attempts = 0;
  private stopped = false;
  private lastSentT = -1;
  private readonly now: () => number;
  private readonly timeScale: number;
  private readonly backoff: number[];
  // meeting clock: meeting_t = base + (now - wall0) * scale
  private clockBase = 0;
  private clockWall0: number;
  private clockSynced = false;

  constructor(private opts: SessionOptions) {
    this.now = opts.now ?? (() => Date.now());
    this.timeScale = opts.timeScale ?? 1;
    this.backoff = opts.backoffMs ?? [250, 500, 1000, 2000];
    this.clockWall0 = this.now();
    this.connect();
  }

  meetingTimeMs(): number {
    return Math.max(0, Math.round(this.clockBase + (this.now() - this.clockWall0) * this.timeScale));
  }

  private emitChange(): void {
    this.opts.onChange?.(this.state);
  }

  private connect(): void {
    const socket = this.opts.socketFactory(this.opts.url);
    this.socket = socket;
    socket.onopen = () => {
      this.attempts = 0;
      // Re-opening an existing meeting is a no-op error we tolerate, which
      // is what makes rejoin-after-server-restart work.
      socket.send(JSON.stringify({ type: "open", meeting: this.opts.meetingId }));
      socket.send(
        JSON.stringify({
          type: "join",
          meeting: this.opts.meetingId,
          participant: this.opts.participantId,
        }),
      );
    };
    socket.onmessage = (ev) => {
      const raw = typeof ev.data === "string" ? ev.data : String(ev.data);
      const frame = parseServerFrame(raw);
      if (frame) this.handleFrame(frame);
    };
    socket.onclose = () => {
      if (this.stopped) return;
      this.state.status = "reconnecting";
      this.emitChange();
      const delay = this.backoff[Math.min(this.attempts, this.backoff.length - 1)];
      this.attempts += 1;
      setTimeout(() => {
        if (!this.stopped) this.connect();
      }, delay);
    };
    socket.onerror = () => {
      // onclose follows; nothing to do here
    };
  }

  private handleFrame(frame: ServerFrame): void {
    switch (frame.type) {
      case "ack":
        if (frame.op === "join") {
          this.state.status = "joined";
          this.state.roster = frame.roster ?? this.state.roster;
          this.state.lastError = null;
          this.flushQueued();
        }
        break;
      case "err":
        if (frame.code === "duplicate_meeting") break; // expected on rejoin
        this.state.lastError = `${frame.code}: ${frame.detail}`;
        break;
      case "mm": {
        const current = this.state.snapshot;
        if (current && frame.t_ms < current.t_ms) break; // stale frame
        this.state.snapshot = frame;
        if (!this.clockSynced) {
          // first snapshot anchors the meeting clock
          this.clockBase = frame.t_ms;
          this.clockWall0 = this.now();
          this.clockSynced = true;
        }
        this.state.roster = Object.keys(frame.counts);
        break;
      }
      case "metrics":
        this.state.metrics = frame.data;
        break;
    }
    this.emitChange();
  }

  private sendOrQueue(frame: VadFrame): void {
    if (this.socket && this.socket.readyState === OPEN && this.state.status === "joined") {
      this.socket.send(JSON.stringify(frame));
    } else {
      this.queued.push(frame);
    }
  }

  private flushQueued(): void {
    if (!this.socket || this.socket.readyState !== OPEN) return;
    for (const frame of this.queued) {
      this.socket.send(JSON.stringify(frame));
    }
    this.queued = [];
  }

  /**
   * Edge-triggered talk control: a press emits one onset, a release one
   * offset; repeats of the same edge (key auto-repeat) are ignored.
   * Frames during a disconnect are queued and flushed in order on rejoin.
   */
  holdToSpeak(pressed: boolean): void {
    if (pressed === this.state.speaking) return;
    this.state.speaking = pressed;
    this.lastSentT = Math.max(this.lastSentT + 1, this.meetingTimeMs());
    this.sendOrQueue({
      type: "vad",
      meeting: this.opts.meetingId,
      participant: this.opts.participantId,
      t_ms: this.lastSentT,
      speaking: pressed,
    });
    this.emitChange();
  }

  /** Ask the server to close the meeting and hand back final metrics. */
  finalize(): void {
    if (this.socket && this.socket.readyState === OPEN) {
      this.socket.send(JSON.stringify({ type: "finalize", meeting: this.opts.meetingId }));
    }
  }

  close(): void {
    this.stopped = true;
    this.state.status = "closed";
    this.socket?.close();
    this.emitChange();
  }
}
