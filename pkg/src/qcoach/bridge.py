"""Simulated robot bridge.

Stands in for the WiFi relay board that normally sits between the
training app and the robot: same wire surface (one ASCII command line in,
one JSON reply out, plus a telemetry read), same serial-device behavior
(one command at a time, busy means try again), and a small kinematic
model of the robot itself — each move smears the heading by 1 to 2
degrees in the robot's bias direction, and an IMU-style correction snaps
it back to the commanded cardinal after every move.

Wire grammar, one newline-terminated ASCII line per command:

    MOVE <U|D|L|R>
    RESET <row> <col> <0|90|180|270>
    POSE

A real-hardware adapter that speaks this surface can replace this module
without the session noticing.
"""

from __future__ import annotations

import json
import random
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional, Union

from .maze import Action, GridPos, MazeConfig, WallEdge

MAX_LINE_BYTES = 128
CORRECTION_TOLERANCE_DEG = 0.5

CARDINALS = (0.0, 90.0, 180.0, 270.0)

# compass-style: up is 0, right 90, down 180, left 270
CARDINAL_BY_ACTION = {
    Action.UP: 0.0,
    Action.RIGHT: 90.0,
    Action.DOWN: 180.0,
    Action.LEFT: 270.0,
}


class CommandDecodeError(ValueError):
    pass


def circular_diff_deg(a: float, b: float) -> float:
    """Smallest absolute angle between two headings, in [0, 180]."""
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


@dataclass(frozen=True)
class Pose:
    cell: GridPos
    heading_deg: float

    @property
    def ideal_heading_deg(self) -> float:
        return min(CARDINALS, key=lambda c: circular_diff_deg(self.heading_deg, c))

    def to_dict(self) -> dict:
        return {"row": self.cell.row, "col": self.cell.col, "heading_deg": self.heading_deg}


@dataclass(frozen=True)
class MoveCmd:
    direction: Action


@dataclass(frozen=True)
class ResetCmd:
    cell: GridPos
    heading_deg: float


@dataclass(frozen=True)
class PoseCmd:
    pass


BridgeCommand = Union[MoveCmd, ResetCmd, PoseCmd]


@dataclass(frozen=True)
class BridgeReply:
    status: str  # "OK" | "ERR"
    pose: Pose
    message: str = ""

    def to_dict(self) -> dict:
        return {"status": self.status, "pose": self.pose.to_dict(), "message": self.message}


def encode_command(cmd: BridgeCommand) -> str:
    if isinstance(cmd, MoveCmd):
        return f"MOVE {cmd.direction.letter}\n"
    if isinstance(cmd, ResetCmd):
        return f"RESET {cmd.cell.row} {cmd.cell.col} {int(cmd.heading_deg)}\n"
    if isinstance(cmd, PoseCmd):
        return "POSE\n"
    raise TypeError(f"not a bridge command: {cmd!r}")


def decode_command(line: str) -> BridgeCommand:
    """Parse one framed command line; errors name the offending token."""
    if len(line.encode("ascii", errors="replace")) > MAX_LINE_BYTES:
        raise CommandDecodeError(f"line longer than {MAX_LINE_BYTES} bytes")
    if not line.isascii():
        raise CommandDecodeError("line is not ASCII")
    tokens = line.strip().split()
    if not tokens:
        raise CommandDecodeError("empty command line")
    verb = tokens[0]
    if verb == "MOVE":
        if len(tokens) != 2:
            raise CommandDecodeError(f"MOVE takes 1 argument, got {len(tokens) - 1}")
        letter = tokens[1]
        if letter not in "UDLR" or len(letter) != 1:
            raise CommandDecodeError(f"unknown direction {letter!r}")
        return MoveCmd(Action.from_letter(letter))
    if verb == "RESET":
        if len(tokens) != 4:
            raise CommandDecodeError(f"RESET takes 3 arguments, got {len(tokens) - 1}")
        try:
            row, col, heading = int(tokens[1]), int(tokens[2]), int(tokens[3])
        except ValueError as exc:
            raise CommandDecodeError(f"bad RESET argument: {exc}") from None
        if float(heading) not in CARDINALS:
            raise CommandDecodeError(f"heading {heading} is not a cardinal (0/90/180/270)")
        return ResetCmd(GridPos(row, col), float(heading))
    if verb == "POSE":
        if len(tokens) != 1:
            raise CommandDecodeError(f"POSE takes no arguments, got {len(tokens) - 1}")
        return PoseCmd()
    raise CommandDecodeError(f"unknown verb {verb}")


class DriftModel:
    """Per-move heading perturbation, 1 to 2 degrees per move.

    The sign is drawn once per robot: a real differential drive veers
    consistently to one side, which is what makes the error accumulate
    move after move instead of cancelling out.
    """

    def __init__(self, seed: int = 0, low_deg: float = 1.0, high_deg: float = 2.0):
        if not 0.0 <= low_deg <= high_deg:
            raise ValueError("drift interval must satisfy 0 <= low <= high")
        self.low_deg = low_deg
        self.high_deg = high_deg
        self._rng = random.Random(seed)
        self.sign = 1.0 if self._rng.random() < 0.5 else -1.0

    def draw(self) -> float:
        return self.sign * self._rng.uniform(self.low_deg, self.high_deg)


class RobotSimulator:
    """Kinematics of the grid robot: cell, heading, drift, correction."""

    def __init__(
        self,
        config: MazeConfig,
        drift: Optional[DriftModel] = None,
        correction_enabled: bool = True,
    ):
        self.config = config
        self.drift = drift or DriftModel()
        self.correction_enabled = correction_enabled
        self._cell = config.start
        self._commanded_heading = 0.0
        self._heading_err = 0.0  # signed, relative to the commanded cardinal

    @property
    def pose(self) -> Pose:
        return Pose(self._cell, (self._commanded_heading + self._heading_err) % 360.0)

    @property
    def heading_error_deg(self) -> float:
        """Circular distance between true heading and the commanded cardinal."""
        return circular_diff_deg(self.pose.heading_deg, self._commanded_heading)

    def execute(self, cmd: BridgeCommand) -> BridgeReply:
        if isinstance(cmd, PoseCmd):
            return BridgeReply("OK", self.pose)
        if isinstance(cmd, ResetCmd):
            if not self.config.in_bounds(cmd.cell):
                return BridgeReply("ERR", self.pose, "reset cell out of bounds")
            self._cell = cmd.cell
            self._commanded_heading = cmd.heading_deg
            self._heading_err = 0.0
            return BridgeReply("OK", self.pose)
        return self._move(cmd.direction)

    def _move(self, direction: Action) -> BridgeReply:
        # rotating toward the commanded cardinal carries the error along
        self._commanded_heading = CARDINAL_BY_ACTION[direction]
        row, col = self._cell
        dr, dc = {Action.UP: (-1, 0), Action.DOWN: (1, 0),
                  Action.LEFT: (0, -1), Action.RIGHT: (0, 1)}[direction]
        target = GridPos(row + dr, col + dc)
        blocked = (
            not self.config.in_bounds(target)
            or WallEdge(self._cell, target) in self.config.walls
        )
        if not blocked:
            self._cell = target
        self._heading_err += self.drift.draw()
        if self.correction_enabled:
            # IMU realign: within tolerance of the nearest cardinal again
            self._heading_err = 0.0
        message = "blocked" if blocked else "moved"
        return BridgeReply("OK", self.pose, message)


class BridgeServer:
    """Tiny HTTP face of the simulator.

    POST /command takes one framed line (text/plain) and answers with the
    JSON reply; GET /telemetry returns the last completed pose. The
    device is serial: a command arriving while another is being executed
    is answered 409 instead of queued.
    """

    def __init__(
        self,
        simulator: RobotSimulator,
        host: str = "127.0.0.1",
        port: int = 0,
        move_duration_s: float = 0.0,
    ):
        self.simulator = simulator
        self.move_duration_s = move_duration_s
        self._device_lock = threading.Lock()
        self._telemetry = simulator.pose
        self._httpd = ThreadingHTTPServer((host, port), self._make_handler())
        self._thread: Optional[threading.Thread] = None

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def url(self) -> str:
        host = self._httpd.server_address[0]
        return f"http://{host}:{self.port}"

    def start(self) -> None:
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def handle_line(self, line: str) -> tuple[int, dict]:
        """Decode and execute one command line; (http status, body)."""
        try:
            cmd = decode_command(line)
        except CommandDecodeError as exc:
            return 400, {"error": str(exc)}
        if not self._device_lock.acquire(blocking=False):
            return 409, {"error": "busy: a command is already executing"}
        try:
            if isinstance(cmd, MoveCmd) and self.move_duration_s > 0:
                threading.Event().wait(self.move_duration_s)  # motors running
            reply = self.simulator.execute(cmd)
            self._telemetry = reply.pose
            return 200, reply.to_dict()
        finally:
            self._device_lock.release()

    def _make_handler(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, fmt, *args):  # keep test output quiet
                pass

            def _send(self, status: int, body: dict) -> None:
                data = json.dumps(body).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def do_POST(self):
                if self.path != "/command":
                    self._send(404, {"error": "unknown path"})
                    return
                length = int(self.headers.get("Content-Length", 0))
                line = self.rfile.read(length).decode("ascii", errors="replace")
                status, body = server.handle_line(line)
                self._send(status, body)

            def do_GET(self):
                if self.path != "/telemetry":
                    self._send(404, {"error": "unknown path"})
                    return
                self._send(200, server._telemetry.to_dict())

        return Handler


def serve(
    config: MazeConfig,
    host: str = "127.0.0.1",
    port: int = 0,
    seed: int = 0,
    move_duration_s: float = 0.0,
) -> BridgeServer:
    """Build and start a bridge simulator; returns the running server."""
    sim = RobotSimulator(config, DriftModel(seed))
    server = BridgeServer(sim, host=host, port=port, move_duration_s=move_duration_s)
    server.start()
    return server
