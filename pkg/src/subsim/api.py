"""Streaming WebSocket API for cockpits and external planner clients.

One bidirectional socket per client: the server pushes JSON state frames at
the configured stream rate (stale frames are dropped under backpressure,
commands never are), and accepts JSON commands: teleop, arm/disarm,
set_mode, plan, pause/resume/step.
"""

from __future__ import annotations

import asyncio
import queue
import threading
import time

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import wire
from .server import Simulation

MODE_BY_NAME = {"DISARMED": wire.MODE_DISARMED, "MANUAL": wire.MODE_MANUAL, "GUIDED": wire.MODE_GUIDED}


class SimRunner(threading.Thread):
    """Owns the tick loop; commands arrive through a queue, frames leave
    through a latest-value slot (old frames are simply overwritten)."""

    def __init__(self, sim: Simulation, realtime: bool = True):
        super().__init__(daemon=True)
        self.sim = sim
        self.realtime = realtime
        self.commands: queue.Queue = queue.Queue()
        self.stop_event = threading.Event()
        self.paused = False
        self.pending_steps = 0
        self.latest_frame: dict | None = None
        self._frame_every = max(1, round(sim.config.tick_rate / sim.config.stream_rate))

    def submit(self, cmd: dict) -> None:
        self.commands.put(cmd)

    def run(self) -> None:
        next_tick = time.perf_counter()
        while not self.stop_event.is_set():
            while True:
                try:
                    self._apply(self.commands.get_nowait())
                except queue.Empty:
                    break
            if self.paused and self.pending_steps == 0:
                self.latest_frame = self.sim.state_frame()
                time.sleep(0.005)
                next_tick = time.perf_counter()
                continue
            self.sim.tick()
            if self.pending_steps > 0:
                self.pending_steps -= 1
            if self.sim.tick_index % self._frame_every == 0:
                self.latest_frame = self.sim.state_frame()
            if self.realtime:
                next_tick += self.sim.dt
                delay = next_tick - time.perf_counter()
                if delay > 0:
                    time.sleep(delay)
                else:
                    next_tick = time.perf_counter()

    def _apply(self, cmd: dict) -> None:
        kind = cmd.get("type")
        if kind == "teleop":
            self.sim.teleop(int(cmd["robot"]), cmd.get("axes", [0] * 6))
        elif kind == "arm":
            self.sim.arm(int(cmd["robot"]))
        elif kind == "disarm":
            self.sim.disarm(int(cmd["robot"]))
        elif kind == "set_mode":
            self.sim.set_mode(int(cmd["robot"]), MODE_BY_NAME[str(cmd["mode"]).upper()])
        elif kind == "pause":
            self.paused = True
        elif kind == "resume":
            self.paused = False
        elif kind == "step":
            self.paused = True
            self.pending_steps += int(cmd.get("n", 1))

    def shutdown(self) -> None:
        self.stop_event.set()


def build_app(runner: SimRunner) -> FastAPI:
    app = FastAPI(title="subsim")
    sim = runner.sim

    @app.get("/health")
    def health():
        return {"ok": True, "t": sim.t}

    @app.websocket("/ws")
    async def ws(websocket: WebSocket):
        await websocket.accept()
        send_lock = asyncio.Lock()

        async def send(payload: dict) -> None:
            async with send_lock:
                await websocket.send_json(payload)

        await send(sim.scene_description())
        stream_period = 1.0 / sim.config.stream_rate

        async def sender():
            last = None
            while True:
                await asyncio.sleep(stream_period)
                frame = runner.latest_frame
                if frame is not None and frame is not last:
                    await send(frame)
                    last = frame

        async def do_plan(cmd: dict):
            loop = asyncio.get_running_loop()

            def work():
                goals = np.asarray(cmd["goals"], dtype=float).reshape(len(sim.robots), 4)
                return sim.dispatch_plan(goals, planner=cmd.get("planner"), seed=cmd.get("seed"))

            try:
                result = await loop.run_in_executor(None, work)
                payload = {
                    "type": "plan_result",
                    "outcome": result.outcome,
                    "computation_time": result.computation_time,
                    "waypoints": len(result.path) if result.path else 0,
                }
            except Exception as exc:  # malformed input is answered, never fatal
                payload = {"type": "plan_result", "outcome": "Error", "message": str(exc)}
            await send(payload)

        send_task = asyncio.create_task(sender())
        plan_tasks: set[asyncio.Task] = set()
        try:
            while True:
                cmd = await websocket.receive_json()
                kind = cmd.get("type")
                if kind == "plan":
                    task = asyncio.create_task(do_plan(cmd))
                    plan_tasks.add(task)
                    task.add_done_callback(plan_tasks.discard)
                elif kind in ("teleop", "arm", "disarm", "set_mode", "pause", "resume", "step"):
                    try:
                        runner.submit(cmd)
                    except (KeyError, ValueError) as exc:
                        await send({"type": "error", "message": str(exc)})
                else:
                    await send({"type": "error", "message": f"unknown command {kind!r}"})
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            for task in plan_tasks:
                task.cancel()

    return app


def serve(sim: Simulation, listen: str, realtime: bool = True) -> None:
    """Blocking entry point used by the CLI."""
    import uvicorn

    host, _, port = listen.partition(":")
    runner = SimRunner(sim, realtime=realtime)
    runner.start()
    try:
        uvicorn.run(build_app(runner), host=host or "127.0.0.1", port=int(port or 8080), log_level="warning")
    finally:
        runner.shutdown()
