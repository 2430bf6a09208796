"""Operator and experimenter command line over the library and service.

Every command is a thin shell around store/library calls; nothing is
computed here that the programmatic surface cannot produce.  Exit codes:
0 success, 2 validation, 3 authorization, 4 not-found, 5 internal, with the
stable error_code printed on stderr.
"""

from __future__ import annotations

import csv
import functools
import json
import math
import sys
from io import StringIO
from pathlib import Path

import click

from . import aggregate, analytics, attention, simulate, summarize
from .config import load_config
from .errors import ClassrecapError, exit_code_for
from .store import SessionStore


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ClassrecapError as exc:
            click.echo(f"{exc.error_code}: {exc.message}", err=True)
            sys.exit(exit_code_for(exc.error_code))
        except (ValueError, OSError) as exc:
            click.echo(f"validation: {exc}", err=True)
            sys.exit(2)

    return wrapper


def _open_store(storage: str | None, config_path: str | None) -> SessionStore:
    config = load_config(config_path)
    if storage:
        config.storage_path = storage
    return SessionStore(config.storage_path, config)


storage_option = click.option("--storage", default=None, help="SQLite storage path.")
config_option = click.option(
    "--config", "config_path", default=None, help="Config file (JSON or TOML)."
)
format_option = click.option(
    "--format", "fmt", type=click.Choice(["json", "csv", "pretty"]), default="json"
)


@click.group()
def main():
    """Attention telemetry, recap cut-lists, and class analytics."""


@main.command()
@config_option
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@storage_option
@_handle_errors
def serve(config_path, host, port, storage):
    """Run the HTTP service."""
    import uvicorn

    from .api import create_app

    config = load_config(config_path)
    if host:
        config.host = host
    if port:
        config.port = port
    if storage:
        config.storage_path = storage
    app = create_app(SessionStore(config.storage_path, config))
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")


@main.command("register-course")
@click.argument("code")
@click.argument("title")
@storage_option
@config_option
@_handle_errors
def register_course(code, title, storage, config_path):
    """Register a course and print its passcodes."""
    store = _open_store(storage, config_path)
    course = store.register_course(code, title)
    click.echo(
        json.dumps(
            {
                "code": course.code,
                "title": course.title,
                "public_passcode": course.public_passcode,
                "private_passcode": course.private_passcode,
            },
            indent=2,
        )
    )


def _build_dataset(students, minutes, seed, partial, toggle, usage, scenario):
    if scenario:
        duration_s, seed_, profiles, with_usage = simulate.load_scenario(scenario)
        return simulate.simulate_class(
            len(profiles), duration_s, seed_, profiles=profiles, with_usage=with_usage or usage
        )
    return simulate.simulate_class(
        students, minutes * 60, seed, n_partial=partial, n_toggle=toggle, with_usage=usage
    )


@main.command("simulate")
@click.option("--students", type=int, default=9)
@click.option("--minutes", type=int, default=45)
@click.option("--seed", type=int, default=7)
@click.option("--partial", type=int, default=0, help="Students attending only part of class.")
@click.option("--toggle", type=int, default=1, help="Students with note-taking toggle minutes.")
@click.option("--usage/--no-usage", default=False, help="Also generate playback usage events.")
@click.option("--scenario", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Write scenario + CSVs here.")
@click.option("--course-code", default=None)
@click.option("--title", default="Simulated class")
@storage_option
@config_option
@_handle_errors
def simulate_cmd(students, minutes, seed, partial, toggle, usage, scenario, out_dir, course_code, title, storage, config_path):
    """Generate a synthetic class; load it into storage or write files."""
    dataset = _build_dataset(students, minutes, seed, partial, toggle, usage, scenario)
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "scenario.json").write_text(
            json.dumps(simulate.scenario_to_dict(dataset), indent=2) + "\n", encoding="utf-8"
        )
        for trace in dataset.traces:
            with open(out / f"{trace.student_ref}.csv", "w", newline="", encoding="utf-8") as fh:
                attention.write_trace_csv(trace, fh)
        click.echo(json.dumps({"out": str(out), "students": len(dataset.traces)}))
        return
    store = _open_store(storage, config_path)
    info = simulate.load_dataset(
        store, dataset, course_code=course_code or f"SIM-{seed}", title=title
    )
    click.echo(json.dumps(info, indent=2))


@main.command("ingest-replay")
@click.option("--url", required=True, help="Base URL of a running service.")
@click.option("--scenario", type=click.Path(exists=True), default=None)
@click.option("--students", type=int, default=9)
@click.option("--minutes", type=int, default=45)
@click.option("--seed", type=int, default=7)
@click.option("--partial", type=int, default=0)
@click.option("--toggle", type=int, default=1)
@click.option("--usage/--no-usage", default=False)
@click.option("--speedup", type=float, default=0.0, help="Wall-clock speedup; 0 = flat out.")
@click.option("--course-code", default=None)
@click.option("--title", default="Simulated class")
@_handle_errors
def ingest_replay(url, scenario, students, minutes, seed, partial, toggle, usage, speedup, course_code, title):
    """Replay a synthetic class against a live server (one client/student)."""
    dataset = _build_dataset(students, minutes, seed, partial, toggle, usage, scenario)
    info = simulate.replay_dataset(
        url, dataset, course_code=course_code or f"SIM-{seed}", title=title, speedup=speedup
    )
    click.echo(json.dumps(info, indent=2))


def _segments_pretty(segments) -> str:
    return " ".join(
        f"{seg.start_s // 60}-{math.ceil(seg.end_s / 60)}" for seg in segments
    )


@main.command("summarize")
@click.option("--session", "session_id", required=True)
@click.option("--student", default=None, help="Student token.")
@click.option("--all-students", is_flag=True, help="Per-student table for the session.")
@click.option("--strategy", default="all_i_missed")
@click.option("--passcode", required=True, help="The course public passcode.")
@click.option("--playlist", "playlist_path", type=click.Path(), default=None,
              help="Also write a concat playlist here.")
@click.option("--recording", default=None, help="Recording path for the playlist.")
@click.option("--no-fallback", is_flag=True, help="Error out when the student has no trace.")
@format_option
@storage_option
@config_option
@_handle_errors
def summarize_cmd(session_id, student, all_students, strategy, passcode, playlist_path, recording, no_fallback, fmt, storage, config_path):
    """Print a student's recap cut-list, or a per-student session table."""
    store = _open_store(storage, config_path)
    if all_students:
        rows = []
        for token in store.student_tokens(session_id):
            result = store.get_summary(passcode, token, session_id, strategy)
            cut = result["cutlist"]
            segs = [summarize.Segment(s["start_s"], s["end_s"]) for s in cut["segments"]]
            content_s = sum(s.length_s for s in segs)
            rows.append((token, _segments_pretty(segs), len(segs), content_s / 60))
        if fmt == "json":
            click.echo(json.dumps([
                {"student": r[0], "segments": r[1], "n_segments": r[2], "duration_min": round(r[3], 1)}
                for r in rows
            ], indent=2))
        elif fmt == "csv":
            buf = StringIO()
            w = csv.writer(buf)
            w.writerow(["student", "segments_minutes", "n_segments", "duration_min"])
            for r in rows:
                w.writerow([r[0], r[1], r[2], f"{r[3]:.1f}"])
            click.echo(buf.getvalue(), nl=False)
        else:
            width = max([len(r[1]) for r in rows] + [16])
            click.echo(f"{'student':<12} {'segments (minutes)':<{width}} {'count':>5} {'min':>6}")
            for r in rows:
                click.echo(f"{r[0]:<12} {r[1]:<{width}} {r[2]:>5} {r[3]:>6.1f}")
        return

    if not student:
        raise click.UsageError("--student is required unless --all-students is given")
    result = store.get_summary(passcode, student, session_id, strategy, fallback=not no_fallback)
    cuts = result["cutlist"]
    if playlist_path:
        path = recording or result.get("recording_uri") or "recording.mp4"
        cut_obj = summarize.CutList(
            session_ref=cuts["session"],
            student_ref=cuts["student"],
            strategy=summarize.parse_strategy(cuts["strategy"]),
            segments=[summarize.Segment(s["start_s"], s["end_s"]) for s in cuts["segments"]],
            gap_s=cuts["gap_s"],
        )
        with open(playlist_path, "w", encoding="utf-8") as fh:
            summarize.write_concat_playlist(cut_obj, path, fh)
    if fmt == "csv":
        buf = StringIO()
        w = csv.writer(buf)
        w.writerow(["start_s", "end_s"])
        for seg in cuts["segments"]:
            w.writerow([seg["start_s"], seg["end_s"]])
        click.echo(buf.getvalue(), nl=False)
    elif fmt == "pretty":
        click.echo(f"strategy {cuts['strategy']}  segments {len(cuts['segments'])}  "
                   f"playback {result['manifest']['total_playback_s']}s")
        for e in result["manifest"]["entries"]:
            gap = "~gap~ " if e["leading_gap"] else "      "
            click.echo(f"{gap}[{e['start_s']:>6} - {e['end_s']:>6})")
    else:
        click.echo(json.dumps(result, indent=2))


@main.command("volatility-report")
@click.option("--session", "session_id", required=True)
@format_option
@storage_option
@config_option
@_handle_errors
def volatility_report_cmd(session_id, fmt, storage, config_path):
    """Per-student attention spread statistics for a closed session."""
    store = _open_store(storage, config_path)
    report = store.session_volatility(session_id)
    if fmt == "csv":
        buf = StringIO()
        analytics.write_volatility_csv(report, buf)
        click.echo(buf.getvalue(), nl=False)
    elif fmt == "pretty":
        click.echo(f"{'student':<12} {'sigma/s':>9} {'sigma/min':>10} {'minute vol':>11}")
        for s in report.students:
            click.echo(
                f"{s.student_ref:<12} {s.sigma_per_second:>9.3f} "
                f"{s.sigma_minute_aggregates:>10.3f} {s.mean_minute_volatility:>11.3f}"
            )
        for ref in report.exclusions:
            click.echo(f"{ref:<12} {'(insufficient data)':>32}")
    else:
        click.echo(json.dumps({
            "session": report.session_ref,
            "students": [
                {
                    "student": s.student_ref,
                    "sigma_per_second": s.sigma_per_second,
                    "sigma_minute_aggregates": s.sigma_minute_aggregates,
                    "mean_minute_volatility": s.mean_minute_volatility,
                    "minute_volatility": s.minute_volatility,
                }
                for s in report.students
            ],
            "exclusions": report.exclusions,
        }, indent=2))


@main.command("class-chart")
@click.option("--session", "session_id", required=True)
@click.option("--passcode", required=True, help="The course private passcode.")
@click.option("--plot", "plot_path", type=click.Path(), default=None,
              help="Write a stacked chart image (requires matplotlib).")
@format_option
@storage_option
@config_option
@_handle_errors
def class_chart(session_id, passcode, plot_path, fmt, storage, config_path):
    """Anonymized per-minute class attention matrix (professor view)."""
    store = _open_store(storage, config_path)
    view = store.get_class_view(passcode, session_id)
    matrix = view["matrix"]
    if plot_path:
        _write_chart_png(matrix, plot_path, view["session"])
    if fmt == "csv":
        buf = StringIO()
        w = csv.writer(buf)
        w.writerow(["minute"] + list(matrix["participants"]))
        for k, row in zip(matrix["minutes"], matrix["values"]):
            w.writerow([k] + ["" if v is None else f"{v:.6f}" for v in row])
        click.echo(buf.getvalue(), nl=False)
    elif fmt == "pretty":
        click.echo(
            f"session {view['session']}  minutes {len(matrix['minutes'])}  "
            f"participants {view['participant_count']}"
        )
        for k, row in zip(matrix["minutes"], matrix["values"]):
            stacked = sum(v for v in row if v is not None)
            click.echo(f"{k:>4}  {stacked:6.2f}  " + "#" * int(stacked * 4))
    else:
        click.echo(json.dumps(view, indent=2))


def _write_chart_png(matrix: dict, path: str, session_id: str) -> None:
    try:
        import matplotlib
    except ImportError:
        raise ClassrecapError("matplotlib not installed; `pip install classrecap[plots]`")
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    minutes = matrix["minutes"]
    bottoms = [0.0] * len(minutes)
    fig, ax = plt.subplots(figsize=(10, 4))
    for col, label in enumerate(matrix["participants"]):
        heights = [row[col] or 0.0 for row in matrix["values"]]
        color = "#" + label[:6] if len(label) >= 6 else None
        ax.bar(minutes, heights, bottom=bottoms, width=1.0, label=label, color=color)
        bottoms = [b + h for b, h in zip(bottoms, heights)]
    ax.set_xlabel("minute")
    ax.set_ylabel("stacked attention")
    ax.set_title(f"class attention, session {session_id}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


@main.command()
@click.option("--session", "session_id", required=True)
@click.option("--what", type=click.Choice(["traces", "aggregates", "cutlist", "playlist", "chart"]),
              required=True)
@click.option("--student", default=None)
@click.option("--strategy", default="all_i_missed")
@click.option("--passcode", default=None, help="Public (cutlist/playlist) or private (chart).")
@click.option("--recording", default=None)
@click.option("--out", "out_path", type=click.Path(), required=True)
@storage_option
@config_option
@_handle_errors
def export(session_id, what, student, strategy, passcode, recording, out_path, storage, config_path):
    """Write session artifacts (traces, aggregates, cut-lists, chart) to files."""
    store = _open_store(storage, config_path)
    out = Path(out_path)
    if what == "traces":
        if student:
            with open(out, "w", newline="", encoding="utf-8") as fh:
                attention.write_trace_csv(store.get_trace(session_id, student), fh)
        else:
            out.mkdir(parents=True, exist_ok=True)
            for token in store.student_tokens(session_id):
                with open(out / f"{token}.csv", "w", newline="", encoding="utf-8") as fh:
                    attention.write_trace_csv(store.get_trace(session_id, token), fh)
    elif what == "aggregates":
        if not student:
            raise click.UsageError("--student is required for aggregates")
        session = store.get_session(session_id)
        duration = session.duration_s
        if duration is None:
            raise click.UsageError("session is still open")
        aggs = aggregate.minute_aggregates(
            store.get_trace(session_id, student), duration, store.config.coverage_quorum
        )
        with open(out, "w", newline="", encoding="utf-8") as fh:
            aggregate.write_aggregates_csv(aggs, fh)
    elif what in ("cutlist", "playlist"):
        if not (student and passcode):
            raise click.UsageError("--student and --passcode are required")
        result = store.get_summary(passcode, student, session_id, strategy)
        cuts = result["cutlist"]
        cut_obj = summarize.CutList(
            session_ref=cuts["session"],
            student_ref=cuts["student"],
            strategy=summarize.parse_strategy(cuts["strategy"]),
            segments=[summarize.Segment(s["start_s"], s["end_s"]) for s in cuts["segments"]],
            gap_s=cuts["gap_s"],
        )
        with open(out, "w", encoding="utf-8") as fh:
            if what == "cutlist":
                summarize.write_cutlist_json(cut_obj, fh)
            else:
                path = recording or result.get("recording_uri") or "recording.mp4"
                summarize.write_concat_playlist(cut_obj, path, fh)
    else:  # chart
        if not passcode:
            raise click.UsageError("--passcode (private) is required for chart")
        view = store.get_class_view(passcode, session_id)
        out.write_text(json.dumps(view["matrix"], indent=2) + "\n", encoding="utf-8")
    click.echo(json.dumps({"written": str(out)}))


if __name__ == "__main__":
    main()
