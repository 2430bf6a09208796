// Timeline geometry: map cut-list segments onto a horizontal bar. The red
// regions must be exactly the cut-list segments, so this is a straight
// linear projection and nothing else.

import type { SegmentWire } from "./types.js";

export interface TimelineRegion {
  leftPx: number;
  widthPx: number;
  startS: number;
  endS: number;
}

export function timelineRegions(
  segments: SegmentWire[],
  durationS: number,
  widthPx: number,
): TimelineRegion[] {
  if (durationS <= 0 || widthPx <= 0) return [];
  const scale = widthPx / durationS;
  return segments.map((seg) => ({
    leftPx: seg.start_s * scale,
    widthPx: (seg.end_s - seg.start_s) * scale,
    startS: seg.start_s,
    endS: seg.end_s,
  }));
}

/** Inverse projection, used by tests and by click-to-seek. */
export function pxToSeconds(px: number, durationS: number, widthPx: number): number {
  return (px / widthPx) * durationS;
}

export function formatSeconds(totalS: number): string {
  const s = Math.round(totalS);
  const m = Math.floor(s / 60);
  const r = s % 60;
  return `${m}:${String(r).padStart(2, "0")}`;
}
