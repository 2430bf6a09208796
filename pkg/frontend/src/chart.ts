// Stacked attention chart data and rendering. Columns come straight from the
// anonymized matrix: one series per pseudonym, color derived from the
// pseudonym itself (it is a hex hash). Absent cells (student not attending)
// contribute nothing, which is what makes joins and leaves visible.

import type { MatrixWire } from "./types.js";

export interface StackedBand {
  pseudonym: string;
  color: string;
  /** [bottom, top] per minute; null where the participant was absent. */
  spans: ([number, number] | null)[];
}

export interface StackedSeries {
  minutes: number[];
  bands: StackedBand[];
  totals: number[];
  maxTotal: number;
}

export function pseudonymColor(pseudonym: string): string {
  const hex = pseudonym.replace(/[^0-9a-f]/gi, "").padEnd(6, "0").slice(0, 6);
  return `#${hex}`;
}

export function stackedSeries(matrix: MatrixWire): StackedSeries {
  const nMinutes = matrix.minutes.length;
  const running = new Array<number>(nMinutes).fill(0);
  const bands: StackedBand[] = matrix.participants.map((pseudonym, col) => {
    const spans: ([number, number] | null)[] = [];
    for (let row = 0; row < nMinutes; row++) {
      const value = matrix.values[row]?.[col] ?? null;
      if (value === null) {
        spans.push(null);
      } else {
        spans.push([running[row], running[row] + value]);
        running[row] += value;
      }
    }
    return { pseudonym, color: pseudonymColor(pseudonym), spans };
  });
  return {
    minutes: matrix.minutes,
    bands,
    totals: [...running],
    maxTotal: running.length ? Math.max(...running) : 0,
  };
}

export interface ChartOptions {
  width?: number;
  height?: number;
  mode?: "area" | "bar";
}

/** Render the stacked series as an SVG string (area by default, bar toggle).
 * Each minute gets a hover <title> listing per-pseudonym contributions. */
export function renderStackedSvg(series: StackedSeries, opts: ChartOptions = {}): string {
  const width = opts.width ?? 720;
  const height = opts.height ?? 260;
  const mode = opts.mode ?? "area";
  const n = series.minutes.length;
  if (n === 0) return `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}"></svg>`;
  const yMax = Math.max(series.maxTotal, 1e-9);
  const colW = width / n;
  const y = (v: number) => height - (v / yMax) * height;

  const parts: string[] = [];
  for (const band of series.bands) {
    if (mode === "bar") {
      for (let i = 0; i < n; i++) {
        const span = band.spans[i];
        if (!span) continue;
        const [b, t] = span;
        parts.push(
          `<rect x="${(i * colW).toFixed(2)}" y="${y(t).toFixed(2)}" ` +
            `width="${colW.toFixed(2)}" height="${(y(b) - y(t)).toFixed(2)}" ` +
            `fill="${band.color}" data-pseudonym="${band.pseudonym}"/>`,
        );
      }
    } else {
      // area mode: one polygon per contiguous present run
      let run: number[] = [];
      const flush = () => {
        if (run.length === 0) return;
        const top = run
          .map((i) => `${((i + 0.5) * colW).toFixed(2)},${y((band.spans[i] as [number, number])[1]).toFixed(2)}`)
          .join(" ");
        const bottom = [...run]
          .reverse()
          .map((i) => `${((i + 0.5) * colW).toFixed(2)},${y((band.spans[i] as [number, number])[0]).toFixed(2)}`)
          .join(" ");
        parts.push(
          `<polygon points="${top} ${bottom}" fill="${band.color}" fill-opacity="0.85" ` +
            `data-pseudonym="${band.pseudonym}"/>`,
        );
        run = [];
      };
      for (let i = 0; i < n; i++) {
        if (band.spans[i]) run.push(i);
        else flush();
      }
      flush();
    }
  }

  // hover targets, one per minute
  for (let i = 0; i < n; i++) {
    const lines = series.bands
      .filter((b) => b.spans[i])
      .map((b) => {
        const [bot, top] = b.spans[i] as [number, number];
        return `${b.pseudonym}: ${(top - bot).toFixed(2)}`;
      });
    const title = `minute ${series.minutes[i]} — total ${series.totals[i].toFixed(2)}\n${lines.join("\n")}`;
    parts.push(
      `<rect class="hover-cell" data-minute="${series.minutes[i]}" x="${(i * colW).toFixed(2)}" y="0" ` +
        `width="${colW.toFixed(2)}" height="${height}" fill="transparent">` +
        `<title>${title}</title></rect>`,
    );
  }

  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">${parts.join("")}</svg>`
  );
}
