"""Frame-in/atlas-out service.

One WebSocket connection is one session. The client sends JSON messages:

    {"type": "hello"}
    {"type": "select", "channels": ["ST", "GB"]}
    {"type": "frame", "ts": ..., "w": ..., "h": ..., "v": [[x,y,z]x468], "hair": "..."}

and receives ``config``, ``ack``, ``atlas`` (with polylines), ``dropped``,
or ``error`` replies. Frames are evaluated behind a per-session FlowLimiter:
when saturated, the newest frame waits in a single slot and anything it
replaces is answered with ``dropped``. Selection changes apply to frames
received after the change; in-flight frames keep the selection they arrived
under. Sessions share only the immutable compiled atlas.
"""

from __future__ import annotations

import asyncio
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .atlas import AtlasProgram
from .channels import ChannelRegistry, channel_polylines, select_channels
from .errors import AtlasError, FrameFormatError
from .evaluator import EvaluatedAtlas, evaluate_atlas
from .frames import frame_from_obj
from .geometry import LandmarkFrame, SemanticsConfig
from .pipeline import FlowLimiter

logger = logging.getLogger("faceatlas.service")

_LANDING = """<!doctype html>
<html><head><title>faceatlas</title></head>
<body><h1>faceatlas service</h1>
<p>WebSocket endpoint at <code>/ws</code>; health at <code>/healthz</code>.
Build the browser companion (see frontend/) to get the live overlay UI.</p>
</body></html>"""


@dataclass
class _Admitted:
    frame: LandmarkFrame
    selection: tuple  # channel codes snapshot at admission


def _config_message(program: AtlasProgram, registry: ChannelRegistry) -> dict:
    return {
        "type": "config",
        "channels": [
            {
                "code": spec.code,
                "display_name": spec.display_name,
                "color": spec.color_css,
                "flow": [str(p) for p in spec.flow],
            }
            for spec in registry.channels
        ],
        "points": [
            {
                "id": str(pid),
                "name": cp.definition.name_en,
                "region": cp.definition.region,
                "channel": pid.channel,
                "symmetric": cp.definition.is_symmetric,
                "complexity": cp.complexity.value,
            }
            for pid, cp in sorted(program.points.items(), key=lambda kv: kv[1].file_index)
        ],
    }


def _atlas_message(
    result: EvaluatedAtlas,
    program: AtlasProgram,
    registry: ChannelRegistry,
    selection: tuple,
) -> dict:
    msg = result.as_dict()
    msg["type"] = "atlas"
    if result.degenerate:
        msg["polylines"] = []
        return msg
    chosen = select_channels(selection, program)
    wanted = set(chosen.point_ids)
    filtered = EvaluatedAtlas(
        timestamp=result.timestamp,
        points=tuple(p for p in result.points if p.id in wanted),
        uc=result.uc,
        degenerate=False,
    )
    msg["points"] = [p.as_dict() for p in filtered.points]
    polylines = []
    shown_codes = {p.channel for p in filtered.points}
    for spec in registry.channels:
        if spec.code not in shown_codes:
            continue
        for line in channel_polylines(spec, filtered):
            d = line.as_dict()
            d["color"] = spec.color_css
            polylines.append(d)
    msg["polylines"] = polylines
    return msg


class _Session:
    def __init__(
        self,
        ws: WebSocket,
        program: AtlasProgram,
        registry: ChannelRegistry,
        cfg: SemanticsConfig,
        max_in_flight: int,
        frame_delay: float,
    ):
        self.ws = ws
        self.program = program
        self.registry = registry
        self.cfg = cfg
        self.limiter = FlowLimiter(max_in_flight)
        self.selection: tuple = ()
        self.frame_delay = frame_delay
        self.queue: asyncio.Queue = asyncio.Queue()
        self.send_lock = asyncio.Lock()
        self.last_frame_ts: Optional[int] = None

    async def send(self, msg: dict) -> None:
        async with self.send_lock:
            await self.ws.send_json(msg)

    async def worker(self) -> None:
        while True:
            item: _Admitted = await self.queue.get()
            try:
                if self.frame_delay > 0:
                    await asyncio.sleep(self.frame_delay)
                result = evaluate_atlas(self.program, item.frame, self.cfg)
                await self.send(_atlas_message(result, self.program, self.registry, item.selection))
            except asyncio.CancelledError:
                raise
            except Exception as e:  # keep the session alive on a bad frame
                logger.exception("frame evaluation failed")
                try:
                    await self.send({"type": "error", "reason": f"evaluation failed: {e}"})
                except Exception:
                    pass
            finally:
                follow = self.limiter.complete()
                if follow is not None:
                    self.queue.put_nowait(follow)

    async def handle(self, msg) -> None:
        if not isinstance(msg, dict) or "type" not in msg:
            await self.send({"type": "error", "reason": "message must be an object with a 'type'"})
            return
        kind = msg["type"]
        if kind == "hello":
            await self.send(_config_message(self.program, self.registry))
        elif kind == "select":
            channels = msg.get("channels")
            if not isinstance(channels, list) or not all(isinstance(c, str) for c in channels):
                await self.send({"type": "error", "reason": "'channels' must be a list of codes"})
                return
            self.selection = tuple(channels)
            unknown = select_channels(self.selection, self.program).unknown
            await self.send({"type": "ack", "channels": list(self.selection), "unknown": list(unknown)})
        elif kind == "frame":
            try:
                frame = frame_from_obj(msg)
            except (FrameFormatError, AtlasError) as e:
                await self.send({"type": "error", "reason": str(e)})
                return
            if self.last_frame_ts is not None and frame.timestamp <= self.last_frame_ts:
                await self.send(
                    {"type": "error",
                     "reason": f"frame timestamps must strictly increase "
                               f"(got {frame.timestamp} after {self.last_frame_ts})"}
                )
                return
            self.last_frame_ts = frame.timestamp
            status, value = self.limiter.offer(_Admitted(frame, self.selection))
            if status == "admitted":
                self.queue.put_nowait(value)
            elif value is not None:
                await self.send({"type": "dropped", "ts": value.frame.timestamp})
        else:
            await self.send({"type": "error", "reason": f"unknown message type {kind!r}"})


def create_app(
    program: AtlasProgram,
    registry: ChannelRegistry,
    cfg: SemanticsConfig,
    max_in_flight: int = 1,
    frame_delay: float = 0.0,
    webui_dir: Optional[str] = None,
) -> FastAPI:
    """Build the service. ``frame_delay`` artificially slows evaluation and
    exists for deterministic backpressure tests."""
    app = FastAPI(title="faceatlas")

    @app.get("/healthz", response_class=PlainTextResponse)
    async def healthz() -> str:
        return "ok"

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        session = _Session(ws, program, registry, cfg, max_in_flight, frame_delay)
        worker = asyncio.create_task(session.worker())
        try:
            while True:
                try:
                    msg = await ws.receive_json()
                except ValueError:
                    await session.send({"type": "error", "reason": "malformed JSON"})
                    continue
                await session.handle(msg)
        except WebSocketDisconnect:
            pass
        finally:
            worker.cancel()

    if webui_dir and Path(webui_dir).is_dir():
        app.mount("/", StaticFiles(directory=webui_dir, html=True), name="webui")
    else:

        @app.get("/", response_class=HTMLResponse)
        async def landing() -> str:
            return _LANDING

    return app
