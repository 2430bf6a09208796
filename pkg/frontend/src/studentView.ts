// Student review screen: lecture list, strategy chooser with computed
// durations, timeline with the missed regions in red, and the embedded
// player driven by the playback manifest. Every number shown comes from API
// responses; nothing is recomputed here.

import { ApiClient, ApiError } from "./api.js";
import { ManifestPlayer } from "./manifestPlayer.js";
import { formatSeconds, timelineRegions } from "./timeline.js";
import {
  STRATEGIES,
  STRATEGY_LABELS,
  type SessionWire,
  type Strategy,
  type SummaryWire,
} from "./types.js";

export class StudentView {
  private player: ManifestPlayer | null = null;
  private session: SessionWire | null = null;
  private summary: SummaryWire | null = null;
  private strategy: Strategy = "all_i_missed";

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly passcode: string,
    private readonly token: string,
  ) {}

  async load(): Promise<void> {
    this.root.innerHTML = `<p class="muted">Loading lectures…</p>`;
    try {
      const listing = await this.api.listSessions(this.passcode);
      const closed = listing.sessions.filter((s) => s.state === "closed");
      this.root.innerHTML = `
        <h2>${listing.course_code}: ${listing.title}</h2>
        <ul class="lecture-list"></ul>
        <div class="review"></div>`;
      const list = this.root.querySelector(".lecture-list")!;
      if (closed.length === 0) {
        list.innerHTML = `<li class="muted">No recorded lectures yet.</li>`;
      }
      for (const session of closed) {
        const item = document.createElement("li");
        const when = new Date(session.recording_start_ms).toLocaleString();
        const length = session.duration_s ? formatSeconds(session.duration_s) : "?";
        item.innerHTML = `<button>${when} · ${length}</button>`;
        item.querySelector("button")!.addEventListener("click", () => {
          void this.openLecture(session);
        });
        list.appendChild(item);
      }
    } catch (err) {
      this.showError(err);
    }
  }

  private async openLecture(session: SessionWire): Promise<void> {
    this.session = session;
    const review = this.root.querySelector<HTMLElement>(".review")!;
    review.innerHTML = `
      <h3>Lecture review</h3>
      <div class="strategies"></div>
      <div class="timeline-wrap">
        <div class="timeline"></div>
        <div class="timeline-caption muted"></div>
      </div>
      <div class="player-wrap">
        <video controls="false" preload="metadata"></video>
        <div class="interstitial hidden">skipping ahead…</div>
        <div class="controls">
          <button data-act="play">play</button>
          <button data-act="pause">pause</button>
          <button data-act="stop">stop</button>
          <span class="status muted"></span>
        </div>
      </div>`;
    const chooser = review.querySelector<HTMLElement>(".strategies")!;
    chooser.innerHTML = STRATEGIES.map(
      (s) =>
        `<button class="strategy" data-strategy="${s}">${STRATEGY_LABELS[s]}<span class="dur muted">…</span></button>`,
    ).join("");
    for (const button of chooser.querySelectorAll<HTMLButtonElement>(".strategy")) {
      button.addEventListener("click", () => {
        void this.chooseStrategy(button.dataset.strategy as Strategy);
      });
    }
    // computed durations per strategy; unavailable ones (e.g. too little
    // peer data) are shown as such
    await Promise.all(
      STRATEGIES.map(async (strategy) => {
        const span = chooser.querySelector<HTMLElement>(
          `[data-strategy="${strategy}"] .dur`,
        )!;
        try {
          const summary = await this.api.getSummary(
            this.passcode,
            this.token,
            session.session_id,
            strategy,
          );
          span.textContent = formatSeconds(summary.cutlist.total_playback_s);
        } catch (err) {
          span.textContent = err instanceof ApiError ? "n/a" : "error";
        }
      }),
    );
    await this.chooseStrategy(this.strategy);
  }

  private async chooseStrategy(strategy: Strategy): Promise<void> {
    if (!this.session) return;
    this.strategy = strategy;
    try {
      this.summary = await this.api.getSummary(
        this.passcode,
        this.token,
        this.session.session_id,
        strategy,
      );
    } catch (err) {
      this.showError(err);
      return;
    }
    this.renderTimeline();
    this.bindPlayer();
  }

  private renderTimeline(): void {
    if (!this.summary || !this.session) return;
    const bar = this.root.querySelector<HTMLElement>(".timeline")!;
    const caption = this.root.querySelector<HTMLElement>(".timeline-caption")!;
    bar.innerHTML = "";
    const width = bar.clientWidth || 720;
    // red regions are exactly the cut-list segments
    for (const region of timelineRegions(
      this.summary.cutlist.segments,
      this.summary.duration_s,
      width,
    )) {
      const div = document.createElement("div");
      div.className = "missed";
      div.style.left = `${region.leftPx}px`;
      div.style.width = `${region.widthPx}px`;
      div.title = `${formatSeconds(region.startS)} – ${formatSeconds(region.endS)}`;
      bar.appendChild(div);
    }
    caption.textContent =
      `${STRATEGY_LABELS[this.strategy]}: ${this.summary.cutlist.segments.length} segment(s), ` +
      `${formatSeconds(this.summary.cutlist.total_playback_s)} playback`;
  }

  private bindPlayer(): void {
    if (!this.summary || !this.session) return;
    const wrap = this.root.querySelector<HTMLElement>(".player-wrap")!;
    const video = wrap.querySelector<HTMLVideoElement>("video")!;
    const interstitial = wrap.querySelector<HTMLElement>(".interstitial")!;
    const status = wrap.querySelector<HTMLElement>(".status")!;
    if (this.summary.recording_uri) video.src = this.summary.recording_uri;

    this.player?.dispose();
    const sessionId = this.session.session_id;
    const strategy = this.strategy;
    this.player = new ManifestPlayer(video, this.summary.manifest, {
      onUsage: (range) => {
        void this.api
          .logUsage(this.passcode, this.token, sessionId, range.start_s, range.end_s, strategy)
          .catch(() => undefined);
      },
      onGapStart: () => interstitial.classList.remove("hidden"),
      onGapEnd: () => interstitial.classList.add("hidden"),
      onStateChange: (state) => {
        status.textContent = state === "error" ? "recording unreachable" : state;
      },
    });
    for (const button of wrap.querySelectorAll<HTMLButtonElement>("[data-act]")) {
      button.onclick = () => {
        if (!this.player) return;
        if (button.dataset.act === "play") this.player.play();
        else if (button.dataset.act === "pause") this.player.pause();
        else this.player.stop();
      };
    }
  }

  private showError(err: unknown): void {
    const message =
      err instanceof ApiError ? `${err.errorCode}: ${err.message}` : String(err);
    this.root.innerHTML = `<p class="error">${message}</p>`;
  }
}
