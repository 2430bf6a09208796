// Professor review: lecture list behind the private passcode, the stacked
// anonymized attention chart, and a playback window whose cursor is kept in
// sync with the chart. Only pseudonymized matrix data ever reaches this code.

import { ApiClient, ApiError } from "./api.js";
import { renderStackedSvg, stackedSeries } from "./chart.js";
import { formatSeconds } from "./timeline.js";
import type { SessionWire } from "./types.js";

export class ProfessorView {
  private mode: "area" | "bar" = "area";
  private session: SessionWire | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly passcode: string,
  ) {}

  async load(): Promise<void> {
    this.root.innerHTML = `<p class="muted">Loading lectures…</p>`;
    try {
      const listing = await this.api.listSessions(this.passcode);
      const closed = listing.sessions.filter((s) => s.state === "closed");
      this.root.innerHTML = `
        <h2>${listing.course_code}: ${listing.title}</h2>
        <ul class="lecture-list"></ul>
        <div class="class-review"></div>`;
      const list = this.root.querySelector(".lecture-list")!;
      if (closed.length === 0) {
        list.innerHTML = `<li class="muted">No recorded lectures yet.</li>`;
      }
      for (const session of closed) {
        const item = document.createElement("li");
        const when = new Date(session.recording_start_ms).toLocaleString();
        item.innerHTML = `<button>${when}</button>`;
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
    const pane = this.root.querySelector<HTMLElement>(".class-review")!;
    pane.innerHTML = `<p class="muted">Loading class view…</p>`;
    try {
      const view = await this.api.getClassView(this.passcode, session.session_id);
      const series = stackedSeries(view.matrix);
      pane.innerHTML = `
        <h3>${formatSeconds(view.duration_s)} lecture ·
            ${view.participant_count} students logged attention</h3>
        <button class="mode-toggle">switch to bar</button>
        <div class="chart-wrap">
          <div class="chart"></div>
          <div class="chart-cursor"></div>
        </div>
        <div class="player-wrap">
          <video controls preload="metadata"></video>
        </div>`;
      const chart = pane.querySelector<HTMLElement>(".chart")!;
      const render = () => {
        chart.innerHTML = renderStackedSvg(series, { mode: this.mode });
      };
      render();
      pane.querySelector<HTMLButtonElement>(".mode-toggle")!.onclick = (ev) => {
        this.mode = this.mode === "area" ? "bar" : "area";
        (ev.target as HTMLButtonElement).textContent =
          this.mode === "area" ? "switch to bar" : "switch to area";
        render();
      };

      const video = pane.querySelector<HTMLVideoElement>("video")!;
      if (session.recording_uri) video.src = session.recording_uri;
      const cursor = pane.querySelector<HTMLElement>(".chart-cursor")!;
      const wrap = pane.querySelector<HTMLElement>(".chart-wrap")!;
      // chart cursor follows playback; clicking a minute seeks the video
      video.addEventListener("timeupdate", () => {
        const frac = view.duration_s ? video.currentTime / view.duration_s : 0;
        cursor.style.left = `${Math.min(1, Math.max(0, frac)) * wrap.clientWidth}px`;
      });
      chart.addEventListener("click", (ev) => {
        const minute = (ev.target as Element).closest("[data-minute]");
        if (minute) {
          video.currentTime = Number(minute.getAttribute("data-minute")) * 60;
          void video.play();
        }
      });
    } catch (err) {
      this.showError(err, pane);
    }
  }

  private showError(err: unknown, where: HTMLElement = this.root): void {
    if (err instanceof ApiError && (err.status === 401 || err.status === 403)) {
      // wrong or missing private passcode: surface the prompt again
      where.innerHTML = `<p class="error">${err.errorCode}: ${err.message} —
        check the private passcode.</p>`;
      return;
    }
    where.innerHTML = `<p class="error">${String(err)}</p>`;
  }
}
