"""HTTP/WS operator surface over a running controller.

Endpoints: GET /scene (latest state JSON), GET /config, POST /goals,
POST /thresholds, GET /frame/annotated (pixmap), WS /events (one state
push per processed frame). Config changes swap atomically and apply from
the next frame.
"""

from __future__ import annotations

import asyncio
import logging
import queue
import threading
import time
from fastapi import FastAPI, Response, WebSocket, WebSocketDisconnect

from .dispatch import plc_write
from .ingest import FrameServer, LatestWinsMailbox, file_source
from .overlay import render_annotated
from .pipeline import Controller, PipelineConfig, PlcEndpoint, SceneState
from .scene_vision import ConfigurationError, Role

log = logging.getLogger(__name__)


def create_app(controller: Controller) -> FastAPI:
    app = FastAPI(title="warehouse-router")

    @app.get("/scene")
    def scene() -> Response:
        state = controller.latest()
        if state is None:
            return Response(
                '{"frame_seq":0,"platforms":{},"objects":[]}',
                media_type="application/json",
            )
        return Response(state.to_json(), media_type="application/json")

    @app.get("/config")
    def config() -> dict:
        return controller.config.to_json_dict()

    @app.post("/goals")
    def set_goal(body: dict) -> Response:
        try:
            controller.set_goal(str(body["platform_id"]), float(body["x"]), float(body["y"]))
        except KeyError as exc:
            return Response(f'{{"error":"{exc.args[0]}"}}', 404, media_type="application/json")
        except (TypeError, ValueError) as exc:
            return Response(f'{{"error":"{exc}"}}', 400, media_type="application/json")
        return Response('{"ok":true}', media_type="application/json")

    @app.post("/thresholds")
    def set_threshold(body: dict) -> Response:
        try:
            role = Role(body["role"])
            lo = tuple(int(v) for v in body["lo"])
            hi = tuple(int(v) for v in body["hi"])
            controller.set_threshold(role, lo, hi, body.get("platform_id"))  # type: ignore[arg-type]
        except KeyError as exc:
            return Response(f'{{"error":"{exc.args[0]}"}}', 404, media_type="application/json")
        except (TypeError, ValueError, ConfigurationError) as exc:
            return Response(f'{{"error":"{exc}"}}', 400, media_type="application/json")
        return Response('{"ok":true}', media_type="application/json")

    @app.get("/frame/annotated")
    def annotated() -> Response:
        from .frames import encode_p6

        state = controller.latest()
        frame = controller.latest_frame()
        if state is None or frame is None:
            return Response('{"error":"no frame yet"}', 404, media_type="application/json")
        return Response(
            encode_p6(render_annotated(frame, state)),
            media_type="image/x-portable-pixmap",
        )

    @app.websocket("/events")
    async def events(ws: WebSocket) -> None:
        await ws.accept()
        sub = controller.subscribe()
        loop = asyncio.get_running_loop()

        def poll() -> SceneState | None:
            try:
                return sub.get(timeout=0.25)
            except queue.Empty:
                return None

        try:
            while True:
                state = await loop.run_in_executor(None, poll)
                if state is None:
                    continue
                await ws.send_text(state.to_json(include_graphs=False))
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            controller.unsubscribe(sub)

    return app


def default_dispatcher(pid: str, endpoint: PlcEndpoint, motion) -> None:
    plc_write((endpoint.host, endpoint.port), endpoint.db_number, endpoint.start_offset, motion)


class ServiceRuntime:
    """Wires frame sources into a controller on background threads.

    Exactly one pipeline thread consumes a latest-wins mailbox, so a burst
    of frames costs only staleness, never a queue. Sources: the TCP ingest
    server and/or a replayed pixmap directory.
    """

    def __init__(
        self,
        config: PipelineConfig,
        ingest: tuple[str, int] | None = None,
        replay: str | None = None,
        replay_fps: float = 10.0,
        replay_loop: bool = False,
        dispatch: bool = True,
    ):
        self.controller = Controller(
            config, default_dispatcher if dispatch and config.plc else None
        )
        self.mailbox = LatestWinsMailbox()
        self._ingest_addr = ingest
        self._replay = replay
        self._replay_fps = replay_fps
        self._replay_loop = replay_loop
        self._server: FrameServer | None = None
        self._running = False
        self._threads: list[threading.Thread] = []

    def start(self) -> "ServiceRuntime":
        self._running = True
        if self._ingest_addr is not None:
            host, port = self._ingest_addr
            self._server = FrameServer(
                host, port, on_frame=self.mailbox.put,
                mm_per_px=self.controller.config.mm_per_px,
            ).start()
        t = threading.Thread(target=self._pipeline_loop, daemon=True)
        t.start()
        self._threads.append(t)
        if self._replay is not None:
            t = threading.Thread(target=self._replay_loop_fn, daemon=True)
            t.start()
            self._threads.append(t)
        return self

    def stop(self) -> None:
        self._running = False
        if self._server is not None:
            self._server.stop()

    @property
    def ingest_port(self) -> int | None:
        return self._server.port if self._server else None

    def _pipeline_loop(self) -> None:
        while self._running:
            frame = self.mailbox.get(timeout=0.25)
            if frame is None:
                continue
            try:
                self.controller.process(frame)
            except Exception:  # noqa: BLE001 - a bad frame must not kill the loop
                log.exception("frame processing failed")

    def _replay_loop_fn(self) -> None:
        period = 1.0 / self._replay_fps if self._replay_fps > 0 else 0.0
        while self._running:
            for frame in file_source(self._replay, self.controller.config.mm_per_px):
                if not self._running:
                    return
                self.mailbox.put(frame)
                if period:
                    time.sleep(period)
            if not self._replay_loop:
                return


def run_service(
    runtime: ServiceRuntime, host: str = "127.0.0.1", port: int = 8000
) -> None:
    import uvicorn

    runtime.start()
    app = create_app(runtime.controller)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        runtime.stop()
