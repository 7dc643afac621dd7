/** Strip-chart series with bucketed min/max downsampling.
 *
 * A series keeps a bounded history; rendering reduces it so that no more
 * than two points (the bucket's min and max) are emitted per output pixel,
 * which preserves spikes that plain decimation would drop.
 */

export interface Point {
  x: number;
  y: number;
}

export class Series {
  private points: Point[] = [];

  constructor(public readonly maxPoints: number = 20000) {}

  get length(): number {
    return this.points.length;
  }

  push(x: number, y: number): void {
    if (!Number.isFinite(x) || !Number.isFinite(y)) return;
    const last = this.points[this.points.length - 1];
    if (last && x < last.x) return; // x must be non-decreasing
    this.points.push({ x, y });
    if (this.points.length > this.maxPoints) {
      this.points.splice(0, this.points.length - this.maxPoints);
    }
  }

  raw(): readonly Point[] {
    return this.points;
  }

  /** At most 2 points per pixel column: per-bucket min and max, in x order. */
  downsample(widthPx: number): Point[] {
    return downsample(this.points, widthPx);
  }
}

export function downsample(points: readonly Point[], widthPx: number): Point[] {
  if (widthPx <= 0) return [];
  if (points.length <= 2 * widthPx) return [...points];
  const x0 = points[0].x;
  const x1 = points[points.length - 1].x;
  const span = x1 - x0;
  if (span <= 0) return [points[0], points[points.length - 1]];
  const out: Point[] = [];
  let bucket: Point[] = [];
  let bucketIdx = 0;
  const flush = () => {
    if (bucket.length === 0) return;
    let lo = bucket[0];
    let hi = bucket[0];
    for (const p of bucket) {
      if (p.y < lo.y) lo = p;
      if (p.y > hi.y) hi = p;
    }
    if (lo === hi) {
      out.push(lo);
    } else {
      out.push(lo.x <= hi.x ? lo : hi, lo.x <= hi.x ? hi : lo);
    }
    bucket = [];
  };
  for (const p of points) {
    const idx = Math.min(widthPx - 1, Math.floor(((p.x - x0) / span) * widthPx));
    if (idx !== bucketIdx) {
      flush();
      bucketIdx = idx;
    }
    bucket.push(p);
  }
  flush();
  return out;
}

/** Map data coordinates to canvas pixels for a simple line plot. */
export function toPixels(
  pts: readonly Point[],
  width: number,
  height: number,
  pad = 2,
): Point[] {
  if (pts.length === 0) return [];
  let xMin = Infinity;
  let xMax = -Infinity;
  let yMin = Infinity;
  let yMax = -Infinity;
  for (const p of pts) {
    xMin = Math.min(xMin, p.x);
    xMax = Math.max(xMax, p.x);
    yMin = Math.min(yMin, p.y);
    yMax = Math.max(yMax, p.y);
  }
  const xSpan = xMax - xMin || 1;
  const ySpan = yMax - yMin || 1;
  const w = width - 2 * pad;
  const h = height - 2 * pad;
  return pts.map((p) => ({
    x: pad + ((p.x - xMin) / xSpan) * w,
    y: pad + h - ((p.y - yMin) / ySpan) * h,
  }));
}
