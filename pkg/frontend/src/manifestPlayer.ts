// Manifest-driven playback: plays each segment of the recording in order,
// seeking across skips, pausing gap_s seconds on every leading gap so the UI
// can show its "skipping ahead" card. Actually-played ranges are reported
// through onUsage; that report stream is where replay-heat data comes from.
//
// The player drives anything that looks like a <video> element, which keeps
// it runnable under test with a fake.

import type { ManifestEntryWire, ManifestWire } from "./types.js";

export interface VideoLike {
  currentTime: number;
  paused: boolean;
  play(): unknown;
  pause(): void;
  addEventListener(type: string, cb: () => void): void;
  removeEventListener(type: string, cb: () => void): void;
}

export type PlayerState = "idle" | "playing" | "gap" | "paused" | "finished" | "error";

export interface PlayedRange {
  start_s: number;
  end_s: number;
}

export interface ManifestPlayerOptions {
  onUsage?: (range: PlayedRange) => void;
  onGapStart?: (next: ManifestEntryWire) => void;
  onGapEnd?: () => void;
  onStateChange?: (state: PlayerState) => void;
  onFinished?: () => void;
  setTimeoutImpl?: (cb: () => void, ms: number) => unknown;
  clearTimeoutImpl?: (handle: unknown) => void;
}

export class ManifestPlayer {
  private entries: ManifestEntryWire[];
  private gapS: number;
  private index = 0;
  private rangeStart: number | null = null; // source time where playback began
  private stateValue: PlayerState = "idle";
  private gapTimer: unknown = null;
  private readonly opts: ManifestPlayerOptions;
  private readonly onTimeUpdate = () => this.handleTimeUpdate();
  private readonly onVideoError = () => this.handleError();

  constructor(
    private readonly video: VideoLike,
    manifest: ManifestWire,
    opts: ManifestPlayerOptions = {},
  ) {
    this.entries = manifest.entries;
    this.gapS = manifest.gap_s;
    this.opts = opts;
    video.addEventListener("timeupdate", this.onTimeUpdate);
    video.addEventListener("error", this.onVideoError);
  }

  get state(): PlayerState {
    return this.stateValue;
  }

  get currentEntry(): ManifestEntryWire | null {
    return this.entries[this.index] ?? null;
  }

  play(): void {
    if (this.entries.length === 0) {
      this.setState("finished");
      this.opts.onFinished?.();
      return;
    }
    if (this.stateValue === "paused") {
      // resume mid-segment: a fresh played range starts here
      this.rangeStart = this.video.currentTime;
      this.video.play();
      this.setState("playing");
      return;
    }
    if (this.stateValue !== "idle") return;
    this.enter(0);
  }

  pause(): void {
    if (this.stateValue !== "playing") return;
    this.flushRange(this.video.currentTime);
    this.video.pause();
    this.setState("paused");
  }

  stop(): void {
    if (this.stateValue === "playing") this.flushRange(this.video.currentTime);
    this.cancelGapTimer();
    this.video.pause();
    this.index = 0;
    this.rangeStart = null;
    if (this.entries.length > 0) this.video.currentTime = this.entries[0].start_s;
    this.setState("idle");
  }

  dispose(): void {
    this.cancelGapTimer();
    this.video.removeEventListener("timeupdate", this.onTimeUpdate);
    this.video.removeEventListener("error", this.onVideoError);
  }

  private setState(state: PlayerState): void {
    if (this.stateValue === state) return;
    this.stateValue = state;
    this.opts.onStateChange?.(state);
  }

  private enter(index: number): void {
    this.index = index;
    const entry = this.entries[index];
    if (entry.leading_gap) {
      this.video.pause();
      this.setState("gap");
      this.opts.onGapStart?.(entry);
      const schedule = this.opts.setTimeoutImpl ?? globalThis.setTimeout.bind(globalThis);
      this.gapTimer = schedule(() => {
        this.gapTimer = null;
        this.opts.onGapEnd?.();
        this.startEntry(entry);
      }, this.gapS * 1000);
    } else {
      this.startEntry(entry);
    }
  }

  private startEntry(entry: ManifestEntryWire): void {
    this.video.currentTime = entry.start_s;
    this.rangeStart = entry.start_s;
    this.video.play();
    this.setState("playing");
  }

  private handleTimeUpdate(): void {
    if (this.stateValue !== "playing") return;
    const entry = this.entries[this.index];
    if (this.video.currentTime >= entry.end_s) {
      this.flushRange(entry.end_s);
      if (this.index + 1 < this.entries.length) {
        this.enter(this.index + 1);
      } else {
        this.video.pause();
        this.setState("finished");
        this.opts.onFinished?.();
      }
    }
  }

  private handleError(): void {
    // Recording unreachable: no usage is reported for the broken stretch.
    this.rangeStart = null;
    this.cancelGapTimer();
    this.setState("error");
  }

  private cancelGapTimer(): void {
    if (this.gapTimer !== null) {
      const clear =
        this.opts.clearTimeoutImpl ??
        ((handle: unknown) => globalThis.clearTimeout(handle as number));
      clear(this.gapTimer);
      this.gapTimer = null;
    }
  }

  private flushRange(endTime: number): void {
    if (this.rangeStart === null) return;
    const start = Math.floor(this.rangeStart);
    const end = Math.floor(endTime);
    this.rangeStart = null;
    if (end > start) this.opts.onUsage?.({ start_s: start, end_s: end });
  }
}
