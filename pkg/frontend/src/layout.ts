// Seat geometry, mirroring the server's layout contract: a regular
// polygon on the unit circle, first participant at the top, clockwise in
// join order. Pure geometry; all displayed numbers come from server frames.

export interface Point {
  x: number;
  y: number;
}

export function polygonLayout(n: number): Point[] {
  if (n < 1) throw new Error(`layout needs at least one participant, got ${n}`);
  const pts: Point[] = [];
  for (let k = 0; k < n; k++) {
    const angle = Math.PI / 2 - (2 * Math.PI * k) / n;
    pts.push({ x: Math.cos(angle), y: Math.sin(angle) });
  }
  return pts;
}

export function rosterLayout(roster: string[]): Map<string, Point> {
  const pts = polygonLayout(roster.length);
  return new Map(roster.map((pid, i) => [pid, pts[i]]));
}
