"""Episode server speaking newline-delimited JSON frames.

One session drives one environment: ``{"cmd":"reset","seed":int}`` starts an
episode, ``{"cmd":"step","action":int}`` advances it, ``{"cmd":"close"}``
ends the session. Responses carry the observation (shape + flat 0/1 data),
mask, location, and info; step responses add reward and done. Protocol and
state errors come back as ``{"error": code, "detail": str}`` without killing
the session where that is safe.
"""

from __future__ import annotations

import json
import socketserver
import sys

import numpy as np

from .env import Env
from .errors import (
    EpisodeFinishedError,
    LodegenError,
    MaskedActionError,
    PlacementFailedError,
    RetryBudgetExceededError,
)


def _obs_payload(observation: np.ndarray) -> dict:
    return {
        "shape": [int(s) for s in observation.shape],
        "data": [int(v) for v in observation.ravel()],
    }


class EpisodeSession:
    """Frame handler bound to one environment instance."""

    def __init__(self, env: Env):
        self.env = env
        self.last_loc: tuple[int, int] | None = None
        self.closed = False

    def handle(self, frame: dict) -> dict:
        if not isinstance(frame, dict) or "cmd" not in frame:
            return {"error": "bad_frame", "detail": "expected an object with 'cmd'"}
        cmd = frame["cmd"]
        if cmd == "reset":
            return self._reset(frame)
        if cmd == "step":
            return self._step(frame)
        if cmd == "close":
            self.closed = True
            return {"ok": True}
        return {"error": "bad_frame", "detail": f"unknown cmd {cmd!r}"}

    def _reset(self, frame: dict) -> dict:
        seed = frame.get("seed")
        if not isinstance(seed, int):
            return {"error": "bad_frame", "detail": "reset needs an integer seed"}
        try:
            obs, mask, loc = self.env.reset(seed)
        except (PlacementFailedError, RetryBudgetExceededError) as err:
            return {"error": "placement_failed", "detail": str(err)}
        self.last_loc = loc if loc is not None else (0, 0)
        return {
            "obs": _obs_payload(obs),
            "mask": [int(v) for v in mask],
            "loc": [self.last_loc[0], self.last_loc[1]],
            "info": self.env.info(),
        }

    def _step(self, frame: dict) -> dict:
        action = frame.get("action")
        if not isinstance(action, int):
            return {"error": "bad_frame", "detail": "step needs an integer action"}
        if self.env.wave is None:
            return {"error": "no_episode", "detail": "reset before stepping"}
        try:
            result = self.env.step(action)
        except EpisodeFinishedError as err:
            return {"error": "episode_finished", "detail": str(err)}
        except MaskedActionError as err:
            return {"error": "masked_action", "detail": str(err)}
        loc = self.env.target if self.env.target is not None else self.last_loc
        self.last_loc = loc
        return {
            "obs": _obs_payload(result.observation),
            "mask": [int(v) for v in result.mask],
            "loc": [loc[0], loc[1]],
            "reward": float(result.reward),
            "done": bool(result.done),
            "info": result.info,
        }


def serve_stdio(env: Env, stdin=None, stdout=None):
    """Run one session over stdio; returns when the peer closes."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    session = EpisodeSession(env)
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            frame = json.loads(line)
        except json.JSONDecodeError as err:
            reply = {"error": "bad_frame", "detail": f"invalid JSON: {err}"}
        else:
            try:
                reply = session.handle(frame)
            except LodegenError as err:
                reply = {"error": "internal", "detail": str(err)}
        stdout.write(json.dumps(reply, separators=(",", ":")) + "\n")
        stdout.flush()
        if session.closed:
            break


def serve_tcp(env_factory, port: int, host: str = "127.0.0.1"):
    """Blocking TCP server; each connection gets a fresh session."""

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            session = EpisodeSession(env_factory())
            for raw in self.rfile:
                line = raw.decode("utf-8").strip()
                if not line:
                    continue
                try:
                    frame = json.loads(line)
                except json.JSONDecodeError as err:
                    reply = {"error": "bad_frame", "detail": f"invalid JSON: {err}"}
                else:
                    try:
                        reply = session.handle(frame)
                    except LodegenError as err:
                        reply = {"error": "internal", "detail": str(err)}
                self.wfile.write((json.dumps(reply, separators=(",", ":")) + "\n").encode("utf-8"))
                self.wfile.flush()
                if session.closed:
                    break

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    return Server((host, port), Handler)
