"""Command-line entry point.

Subcommands: validate (compile an atlas and print its census), eval (one
frame or a JSONL stream to evaluated points, optionally an SVG overlay),
bench (setup and per-frame timing), experiment (pose-sweep accuracy), and
serve (the frame-in/atlas-out service). Exit codes: 0 success, 1 validation
or user error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

from . import synth
from .atlas import census, compile_atlas, format_census_table, parse_atlas
from .channels import bind_channels, parse_channels, select_channels
from .errors import AtlasError
from .evaluator import evaluate_atlas
from .experiment import accuracy_experiment
from .frames import load_semantics, read_frames, semantics_from_obj
from .pipeline import FlowLimiter, bench, run_stream
from .render_svg import render_overlay_svg

_DATA = "faceatlas"


def _packaged(name: str) -> str:
    return resources.files(_DATA).joinpath(f"data/{name}").read_text(encoding="utf-8")


def _load_inputs(args):
    """Resolve atlas/channels/semantics from flags, falling back to the
    packaged samples. A user atlas without a channels file gets default
    flows derived from the program instead of the sample channel file."""
    if args.atlas:
        atlas_text = Path(args.atlas).read_text(encoding="utf-8")
    else:
        atlas_text = _packaged("sample_atlas.csv")
    program = compile_atlas(parse_atlas(atlas_text))

    if args.channels:
        specs = parse_channels(Path(args.channels).read_text(encoding="utf-8"))
    elif args.atlas:
        specs = []
    else:
        specs = parse_channels(_packaged("channels.csv"))
    registry = bind_channels(specs, program)

    if args.semantics:
        cfg = load_semantics(args.semantics)
    else:
        cfg = semantics_from_obj(json.loads(_packaged("semantics.json")))
    return atlas_text, program, registry, cfg


def _dump_json(obj, out_path, pretty: bool) -> None:
    text = json.dumps(obj, indent=2 if pretty else None, sort_keys=pretty)
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _read_one_frame(path: str):
    frames = read_frames(path)
    if not frames:
        raise AtlasError(f"no frames in {path}")
    return frames[0]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    _, program, registry, cfg = _load_inputs(args)
    print(format_census_table(census(program)))
    print(f"{len(program.points)} definitions, {program.point_count()} points, "
          f"channels: {', '.join(program.channels)}")
    return 0


def cmd_eval(args) -> int:
    _, program, registry, cfg = _load_inputs(args)
    selection = tuple(args.select.split(",")) if args.select else ()
    chosen = select_channels(selection, program)
    for code in chosen.unknown:
        print(f"warning: unknown channel {code}", file=sys.stderr)

    if args.stream:
        return _eval_stream(args, program, cfg)

    frame = _read_one_frame(args.frame)
    result = evaluate_atlas(program, frame, cfg)
    if result.degenerate:
        print("warning: degenerate frame, no points evaluated", file=sys.stderr)
    doc = result.as_dict()
    if selection and not result.degenerate:
        wanted = set(chosen.point_ids)
        doc["points"] = [p.as_dict() for p in result.points if p.id in wanted]
    _dump_json(doc, args.out, args.pretty)

    if args.svg:
        if not args.out:
            print("error: --svg needs --out to derive the overlay path", file=sys.stderr)
            return 1
        svg_path = Path(args.out).with_suffix(".svg")
        ids = chosen.point_ids if selection else None
        svg_path.write_text(render_overlay_svg(result, registry, ids), encoding="utf-8")
        print(f"overlay written to {svg_path}", file=sys.stderr)
    return 0


def _eval_stream(args, program, cfg) -> int:
    if args.stream == "-":
        from .frames import iter_frames_jsonl

        frames = list(iter_frames_jsonl(sys.stdin))
    else:
        frames = read_frames(args.stream)
    results = []
    summary = run_stream(
        frames, program, cfg,
        limiter=FlowLimiter(max_in_flight=args.cap),
        sink=lambda r: results.append(r),
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            for r in results:
                f.write(json.dumps(r.as_dict()) + "\n")
    else:
        for r in results:
            print(json.dumps(r.as_dict()))
    print(
        f"stream: admitted {summary.admitted}, dropped {summary.dropped}, "
        f"completed {summary.completed}, malformed {summary.malformed}, "
        f"{summary.fps:.1f} fps",
        file=sys.stderr,
    )
    return 0


def cmd_bench(args) -> int:
    atlas_text, program, registry, cfg = _load_inputs(args)
    frame = _read_one_frame(args.frame) if args.frame else synth.synthetic_frame()
    timing = bench(atlas_text, frame, cfg, iterations=args.iterations)
    _dump_json(timing.as_dict(), args.out, args.pretty)
    print(timing.summary_line(), file=sys.stderr)
    return 0


def cmd_experiment(args) -> int:
    _, program, registry, cfg = _load_inputs(args)
    frame = _read_one_frame(args.frame) if args.frame else synth.synthetic_frame()
    report = accuracy_experiment(program, frame, cfg)
    _dump_json(report.as_dict(), args.out, args.pretty)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    _, program, registry, cfg = _load_inputs(args)
    webui = args.webui
    if webui is None:
        candidate = Path("frontend/dist")
        webui = str(candidate) if candidate.is_dir() else None
    app = create_app(program, registry, cfg, max_in_flight=args.cap, webui_dir=webui)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except (OSError, SystemExit) as e:
        print(f"error: could not serve on {args.host}:{args.port}: {e}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--atlas", help="atlas CSV (default: packaged sample)")
    p.add_argument("--channels", help="channel registry CSV")
    p.add_argument("--semantics", help="semantics config (JSON or TOML)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="faceatlas",
        description="Facial acupoint localization: compile atlases, evaluate frames, serve overlays.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="compile an atlas and print its census")
    _add_data_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("eval", help="evaluate one frame or a JSONL stream")
    _add_data_flags(p)
    p.add_argument("--frame", help="JSONL file; the first frame is used")
    p.add_argument("--stream", help="JSONL file evaluated as a stream ('-' for stdin)")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--select", help="comma-separated channel codes, e.g. ST,GB")
    p.add_argument("--svg", action="store_true", help="also write an overlay SVG next to --out")
    p.add_argument("--pretty", action="store_true")
    p.add_argument("--cap", type=int, default=1_000_000, help="stream mode: max frames in flight")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="timing benchmark")
    _add_data_flags(p)
    p.add_argument("--frame", help="JSONL fixture (default: synthetic)")
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--out")
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("experiment", help="pose-sweep accuracy report")
    _add_data_flags(p)
    p.add_argument("--frame", help="JSONL fixture (default: synthetic)")
    p.add_argument("--out")
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("serve", help="run the frame-in/atlas-out service")
    _add_data_flags(p)
    p.add_argument("--port", type=int, default=8763)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--cap", type=int, default=1, help="max frames in flight per session")
    p.add_argument("--webui", help="static directory for the browser companion")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    level = os.environ.get("FACEATLAS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))

    args = build_parser().parse_args(argv)
    if args.command == "eval" and bool(args.frame) == bool(args.stream):
        print("error: eval needs exactly one of --frame or --stream", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except AtlasError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # pragma: no cover - unexpected
        logging.getLogger("faceatlas").exception("internal error")
        print(f"internal error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
