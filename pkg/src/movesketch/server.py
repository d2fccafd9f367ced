"""WebSocket/UDP service wrapping one engine session.

Concurrency contract: the engine is only ever touched from the event loop's
tick task (commands) or synchronously-atomic queue appends (samples), so the
single-writer rule holds without locks. Each client gets a sender task and
an outbound queue; the tick task never blocks on a slow client.

Wire protocol (JSON text frames on ``/ws``; see PROTOCOL.md):

* server -> client: ``hello`` once on connect, then ``snapshot`` at the
  snapshot rate, plus one ``ack`` or ``error`` per command
* client -> server: ``hello`` (optional), ``sample`` (device input), and
  ``command`` messages carrying a client-unique ``seq``

The UDP port ingests newline-delimited JSON samples with the same fields as
stream CSV rows: ``{"t":..,"device":..,"pos":[x,y,z],"quat":[w,x,y,z]}``.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import logging
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from movesketch.engine import PROTOCOL_VERSION, EngineSession

logger = logging.getLogger(__name__)


class _Client:
    def __init__(self, ws: WebSocket):
        self.ws = ws
        self.outbox: asyncio.Queue[dict] = asyncio.Queue()

    async def sender(self) -> None:
        while True:
            msg = await self.outbox.get()
            await self.ws.send_text(json.dumps(msg))


class _Rebase:
    """Shift each device's own sample clock onto the running session clock.

    Live clients timestamp samples with whatever epoch they have; only the
    per-device ordering is meaningful on the wire. The first sample from a
    device lands at the current session time and the rest keep their
    relative spacing.
    """

    def __init__(self, engine: EngineSession):
        self.engine = engine
        self.offsets: dict[str, float] = {}

    def apply(self, msg: dict) -> dict:
        device = msg.get("device")
        t = msg.get("t")
        if not isinstance(device, str) or not isinstance(t, (int, float)):
            return msg  # let the engine raise a proper error
        if device not in self.offsets:
            self.offsets[device] = self.engine.clock - float(t)
        out = dict(msg)
        out["t"] = float(t) + self.offsets[device]
        return out


class _UdpIngest(asyncio.DatagramProtocol):
    def __init__(self, engine: EngineSession, rebase: _Rebase):
        self.engine = engine
        self.rebase = rebase

    def datagram_received(self, data: bytes, addr) -> None:
        for line in data.decode("utf-8", errors="replace").splitlines():
            line = line.strip()
            if not line:
                continue
            try:
                self.engine.ingest_sample_message(self.rebase.apply(json.loads(line)))
            except Exception as exc:  # no reply channel on UDP; drop and log
                logger.debug("dropped UDP sample from %s: %s", addr, exc)


def create_app(
    engine: EngineSession,
    static_dir: str | None = None,
    udp_port: int | None = None,
) -> FastAPI:
    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        app.state.tick_task = asyncio.create_task(tick_loop())
        app.state.udp_transport = None
        if udp_port is not None:
            loop = asyncio.get_running_loop()
            transport, _ = await loop.create_datagram_endpoint(
                lambda: _UdpIngest(engine, rebase), local_addr=("0.0.0.0", udp_port)
            )
            app.state.udp_transport = transport
        try:
            yield
        finally:
            app.state.tick_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await app.state.tick_task
            if app.state.udp_transport is not None:
                app.state.udp_transport.close()

    app = FastAPI(title="movesketch", lifespan=lifespan)
    app.state.engine = engine
    app.state.clients = set()
    app.state.commands = asyncio.Queue()
    rebase = _Rebase(engine)

    async def tick_loop() -> None:
        dt = engine.config.dt
        loop = asyncio.get_running_loop()
        next_t = loop.time()
        while True:
            next_t += dt
            delay = next_t - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                next_t = loop.time()  # fell behind; resynchronize
            while not app.state.commands.empty():
                client, msg = app.state.commands.get_nowait()
                reply = engine.handle_command(msg)
                client.outbox.put_nowait(reply)
            engine.tick()
            if engine.ticks % engine.config.snapshot_every == 0:
                snapshot = engine.snapshot()
                for client in list(app.state.clients):
                    client.outbox.put_nowait(snapshot)

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        client = _Client(ws)
        app.state.clients.add(client)
        client.outbox.put_nowait(
            {
                "type": "hello",
                "v": PROTOCOL_VERSION,
                "tick_rate": engine.config.tick_rate,
                "snapshot_rate": engine.config.snapshot_rate,
            }
        )
        client.outbox.put_nowait(engine.snapshot())
        send_task = asyncio.create_task(client.sender())
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = json.loads(text)
                except json.JSONDecodeError as exc:
                    client.outbox.put_nowait(
                        {"type": "error", "seq": None, "code": "ParseError", "message": str(exc)}
                    )
                    continue
                kind = msg.get("type")
                if kind == "sample":
                    try:
                        engine.ingest_sample_message(rebase.apply(msg))
                    except Exception as exc:
                        client.outbox.put_nowait(
                            {"type": "error", "seq": None, "code": type(exc).__name__, "message": str(exc)}
                        )
                elif kind == "command":
                    app.state.commands.put_nowait((client, msg))
                elif kind == "hello":
                    pass  # greeting already sent on connect
                else:
                    client.outbox.put_nowait(
                        {
                            "type": "error",
                            "seq": msg.get("seq"),
                            "code": "MalformedCommand",
                            "message": f"unknown message type {kind!r}",
                        }
                    )
        except WebSocketDisconnect:
            pass
        finally:
            app.state.clients.discard(client)
            send_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await send_task

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")

    return app


def serve(
    engine: EngineSession,
    host: str = "127.0.0.1",
    port: int = 8765,
    udp_port: int | None = None,
    static_dir: str | None = None,
) -> None:
    """Run the service until interrupted (blocking)."""
    import uvicorn

    app = create_app(engine, static_dir=static_dir, udp_port=udp_port)
    uvicorn.run(app, host=host, port=port, log_level="warning")
