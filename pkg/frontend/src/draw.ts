// Tiny drawing abstraction so views render identically onto a real canvas
// in the browser and onto a recording fake in tests.

export interface Draw2D {
  clear(w: number, h: number): void;
  line(x1: number, y1: number, x2: number, y2: number, width: number, color: string): void;
  circle(x: number, y: number, r: number, fill: string, stroke?: string): void;
  rect(x: number, y: number, w: number, h: number, fill: string): void;
  text(s: string, x: number, y: number, size: number, color: string, align?: "left" | "center" | "right"): void;
}

export class CanvasDraw implements Draw2D {
  constructor(private ctx: CanvasRenderingContext2D) {}

  clear(w: number, h: number): void {
    this.ctx.clearRect(0, 0, w, h);
  }

  line(x1: number, y1: number, x2: number, y2: number, width: number, color: string): void {
    this.ctx.beginPath();
    this.ctx.lineWidth = width;
    this.ctx.strokeStyle = color;
    this.ctx.moveTo(x1, y1);
    this.ctx.lineTo(x2, y2);
    this.ctx.stroke();
  }

  circle(x: number, y: number, r: number, fill: string, stroke?: string): void {
    this.ctx.beginPath();
    this.ctx.arc(x, y, r, 0, 2 * Math.PI);
    this.ctx.fillStyle = fill;
    this.ctx.fill();
    if (stroke) {
      this.ctx.lineWidth = 1.5;
      this.ctx.strokeStyle = stroke;
      this.ctx.stroke();
    }
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.ctx.fillStyle = fill;
    this.ctx.fillRect(x, y, w, h);
  }

  text(s: string, x: number, y: number, size: number, color: string, align: "left" | "center" | "right" = "left"): void {
    this.ctx.fillStyle = color;
    this.ctx.font = `${size}px sans-serif`;
    this.ctx.textAlign = align;
    this.ctx.fillText(s, x, y);
  }
}

export type DrawOp =
  | { op: "clear"; w: number; h: number }
  | { op: "line"; x1: number; y1: number; x2: number; y2: number; width: number; color: string }
  | { op: "circle"; x: number; y: number; r: number; fill: string; stroke?: string }
  | { op: "rect"; x: number; y: number; w: number; h: number; fill: string }
  | { op: "text"; s: string; x: number; y: number; size: number; color: string; align: string };

/** Test double: records every drawing call as data. */
export class RecordingDraw implements Draw2D {
  ops: DrawOp[] = [];

  clear(w: number, h: number): void {
    this.ops.push({ op: "clear", w, h });
  }

  line(x1: number, y1: number, x2: number, y2: number, width: number, color: string): void {
    this.ops.push({ op: "line", x1, y1, x2, y2, width, color });
  }

  circle(x: number, y: number, r: number, fill: string, stroke?: string): void {
    this.ops.push({ op: "circle", x, y, r, fill, stroke });
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.ops.push({ op: "rect", x, y, w, h, fill });
  }

  text(s: string, x: number, y: number, size: number, color: string, align: "left" | "center" | "right" = "left"): void {
    this.ops.push({ op: "text", s, x, y, size, color, align });
  }
}
