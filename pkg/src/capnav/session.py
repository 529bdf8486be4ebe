"""Live steering sessions and their newline-delimited text protocol.

A Session owns one capsule in one scenario and advances it in wall-clock
windows divided by a time dilation factor, applying operator commands at
window boundaries. The same machinery runs three ways: directly in
process, scripted with simulation-time stamps (fully deterministic, used
for testing), or served over TCP where every message is one JSON object
per line.

Protocol message kinds (all floats SI decimal):
  hello        server -> client on join: protocol version, assigned role
               (controller or observer), scenario summary, envelope.
  command      client -> server: field_magnitude_t, field_direction,
               gradient_tpm, amf_on, rotation_hz. Server broadcasts the
               clamped ack with "acked": true.
  advance_mode client -> server: mode "running" or "paused"; echoed back.
  state        server -> clients: seq, t, position, velocity, region,
               dissolved_fraction, temperature_c, wall_contacts, status.
  end          server -> clients: outcome, t, reason, then stream end.

Clients open by sending a hello line: {"kind": "hello"} (optionally
"role": "observer"). The first client asking for control gets it;
everyone else observes. Command messages from observers are ignored.
The same port also answers plain HTTP: a WebSocket upgrade speaks the
identical protocol (one JSON text per frame), anything else is served
from a static directory so a browser console can be hosted directly.
"""

from __future__ import annotations

import base64
import hashlib
import itertools
import json
import math
import mimetypes
import queue
import socket
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import kernels
from .dynamics import (
    CapsuleSpec,
    CapsuleState,
    StepControl,
    TrajectoryLimits,
    gravity_buoyancy_acceleration,
)
from .errors import FileFormatError, InvalidParameterError
from .flowfield import FlowField, FluidProperties, make_flow
from .geometry import (
    REGION_EXITED_A,
    REGION_EXITED_B,
    Geometry,
    build_tube,
    build_y_junction,
    classify_region,
    entrance_positions,
)
from .hyperthermia import DISSOLUTION_DT, DissolutionModel, default_dissolution
from .locomotion import ROLLING_TUBE_DIAMETER, RollingModel, rolling_velocity
from .magnetics import (
    CapabilityEnvelope,
    MagnetizationCurve,
    clamp_command,
    default_capsule_curve,
    magnetic_force,
    uniform_command,
)

PROTOCOL_VERSION = 1

STATUS_RUNNING = "running"
STATUS_PAUSED = "paused"
STATUS_FINISHED = "finished"

MODE_INFLOW = "inflow"
MODE_ROLLING = "rolling"

OUTCOME_FAILED = "failed"

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
_EMPTY_T = np.empty(0)
_EMPTY_PV = np.empty((0, 6))
_session_ids = itertools.count(1)


@dataclass(frozen=True)
class SteeringCommand:
    """One operator command; zero field means coasting under flow/gravity."""

    field_magnitude_t: float = 0.0
    field_direction: tuple[float, float, float] = (1.0, 0.0, 0.0)
    gradient_tpm: tuple[float, float, float] = (0.0, 0.0, 0.0)
    amf_on: bool = False
    rotation_hz: float = 0.0

    def __post_init__(self):
        values = (self.field_magnitude_t, *self.field_direction, *self.gradient_tpm,
                  self.rotation_hz)
        if not all(math.isfinite(v) for v in values):
            raise InvalidParameterError("command values must be finite")
        if self.field_magnitude_t < 0.0:
            raise InvalidParameterError("field magnitude must be >= 0")
        if self.field_magnitude_t > 0.0 and not any(self.field_direction):
            raise InvalidParameterError("field direction must be nonzero with a field")

    def clamped(self, envelope: CapabilityEnvelope) -> "SteeringCommand":
        field, gradient = clamp_command(envelope, self.field_magnitude_t, self.gradient_tpm)
        return replace(
            self,
            field_magnitude_t=float(field),
            gradient_tpm=tuple(float(g) for g in gradient),
        )


@dataclass(frozen=True)
class Scenario:
    """Everything a session needs: where, in what flow, moving which capsule."""

    geometry: Geometry
    fluid: FluidProperties
    capsule: CapsuleSpec
    flow: FlowField
    curve: MagnetizationCurve
    envelope: CapabilityEnvelope
    mode: str = MODE_INFLOW
    entrance_index: int = 0
    entrance_count: int = 20
    rolling: RollingModel | None = None
    dissolution: DissolutionModel | None = None
    limits: TrajectoryLimits = TrajectoryLimits()
    control: StepControl = StepControl()

    def __post_init__(self):
        if self.mode not in (MODE_INFLOW, MODE_ROLLING):
            raise InvalidParameterError(f"unknown session mode {self.mode!r}")
        if self.mode == MODE_ROLLING and self.geometry.kind != "tube":
            raise InvalidParameterError("rolling sessions need a tube geometry")
        if not 0 <= self.entrance_index < self.entrance_count:
            raise InvalidParameterError("entrance_index out of range")

    def start_position(self) -> np.ndarray:
        if self.mode == MODE_ROLLING:
            floor = -(self.geometry.radius - self.capsule.radius)
            return np.array([2.0 * self.capsule.diameter, 0.0, floor])
        rings = entrance_positions(self.geometry, self.entrance_count, self.capsule.radius)
        return rings[self.entrance_index]


def inflow_scenario(
    mean_velocity: float = 0.65,
    entrance_index: int = 0,
    capsule: CapsuleSpec | None = None,
    fluid: FluidProperties | None = None,
) -> Scenario:
    """The bifurcation navigation bench at one of the studied velocities."""
    capsule = capsule if capsule is not None else CapsuleSpec()
    fluid = fluid if fluid is not None else FluidProperties.water()
    geometry = build_y_junction()
    return Scenario(
        geometry=geometry,
        fluid=fluid,
        capsule=capsule,
        flow=make_flow(geometry, fluid, mean_velocity),
        curve=default_capsule_curve(),
        envelope=CapabilityEnvelope(),
        entrance_index=entrance_index,
        dissolution=default_dissolution(capsule),
    )


def rolling_scenario(
    tube_length: float = 0.10,
    capsule: CapsuleSpec | None = None,
    fluid: FluidProperties | None = None,
) -> Scenario:
    """A quiescent tube where the capsule rolls under a rotating field."""
    capsule = capsule if capsule is not None else CapsuleSpec(diameter=1.69e-3)
    fluid = fluid if fluid is not None else FluidProperties.water()
    geometry = build_tube(ROLLING_TUBE_DIAMETER, tube_length)
    return Scenario(
        geometry=geometry,
        fluid=fluid,
        capsule=capsule,
        flow=make_flow(geometry, fluid, 1.0e-9, profile="parabolic"),
        curve=default_capsule_curve(),
        envelope=CapabilityEnvelope(),
        mode=MODE_ROLLING,
        rolling=RollingModel.calibrated(),
        dissolution=default_dissolution(capsule),
    )


@dataclass(frozen=True)
class Snapshot:
    """Immutable view of a session instant, broadcast to any number of readers."""

    seq: int
    time: float
    position: tuple[float, float, float]
    velocity: tuple[float, float, float]
    region: str
    dissolved_fraction: float
    temperature_c: float
    wall_contacts: int
    status: str
    outcome: str | None


class Session:
    """One capsule being steered; commands apply at window boundaries."""

    def __init__(self, scenario: Scenario, time_dilation: float):
        if time_dilation < 1.0:
            raise InvalidParameterError("time_dilation must be >= 1")
        self.id = f"s{next(_session_ids)}"
        self.scenario = scenario
        self.time_dilation = float(time_dilation)
        self.status = STATUS_PAUSED
        self.outcome: str | None = None
        self.error: str | None = None
        self.wall_contacts = 0
        self.command = SteeringCommand()

        p0 = scenario.start_position()
        v0 = (
            np.zeros(3)
            if scenario.mode == MODE_ROLLING
            else np.asarray(scenario.flow.velocity_at(p0), dtype=float)
        )
        self.state = CapsuleState(0.0, p0.copy(), v0.copy(),
                                  classify_region(scenario.geometry, p0))
        dissolution = scenario.dissolution
        self.temperature_c = dissolution.ambient_c if dissolution is not None else 20.0

        self._seq = itertools.count(1)
        self._state_vec = np.concatenate([[0.0], p0, v0])
        self._gp = kernels.pack_geometry(scenario.geometry)
        self._fl = kernels.pack_flow(scenario.flow)
        self._cp = kernels.pack_capsule(scenario.capsule, scenario.fluid)
        self._ct = kernels.pack_control(scenario.control)
        self._a_ext = self._external_acceleration(self.command)

    def _external_acceleration(self, command: SteeringCommand) -> np.ndarray:
        scenario = self.scenario
        accel = gravity_buoyancy_acceleration(scenario.capsule, scenario.fluid)
        if command.field_magnitude_t > 0.0:
            sampler = uniform_command(
                command.field_direction, command.field_magnitude_t, command.gradient_tpm
            )
            accel = accel + magnetic_force(scenario.curve, sampler.sample(None)) / scenario.capsule.mass
        return accel

    def snapshot(self) -> Snapshot:
        return Snapshot(
            seq=next(self._seq),
            time=self.state.time,
            position=tuple(self.state.position),
            velocity=tuple(self.state.velocity),
            region=self.state.region,
            dissolved_fraction=self.state.dissolved_fraction,
            temperature_c=self.temperature_c,
            wall_contacts=self.wall_contacts,
            status=self.status,
            outcome=self.outcome,
        )


def create_session(scenario: Scenario, time_dilation: float = 100.0) -> Session:
    """A paused session with the capsule released into the local flow."""
    return Session(scenario, time_dilation)


def set_mode(session: Session, mode: str) -> str:
    if mode not in (STATUS_RUNNING, STATUS_PAUSED):
        raise InvalidParameterError(f"unknown advance mode {mode!r}")
    if session.status == STATUS_FINISHED:
        raise InvalidParameterError("session is finished")
    session.status = mode
    return mode


def apply_command(session: Session, command: SteeringCommand) -> SteeringCommand:
    """Clamp onto the envelope, store for the next window, return the ack."""
    if session.status == STATUS_FINISHED:
        raise InvalidParameterError("session is finished")
    ack = command.clamped(session.scenario.envelope)
    session.command = ack
    session._a_ext = session._external_acceleration(ack)
    return ack


def advance(session: Session, wall_dt: float) -> CapsuleState:
    """Simulate wall_dt / time_dilation seconds of physical time."""
    return advance_physical(session, wall_dt / session.time_dilation)


def advance_physical(session: Session, dt: float) -> CapsuleState:
    if dt < 0.0:
        raise InvalidParameterError("dt must be >= 0")
    if dt == 0.0:
        return session.state
    if session.status != STATUS_RUNNING:
        raise InvalidParameterError(f"cannot advance a {session.status} session")

    t0 = session.state.time
    if session.scenario.mode == MODE_ROLLING:
        _advance_rolling(session, dt)
    else:
        _advance_inflow(session, dt)
    _advance_thermal(session, session.state.time - t0)

    if session.state.dissolved_fraction >= 1.0 and session.outcome is None:
        session.outcome = "dissolved"
    if session.outcome is not None:
        session.status = STATUS_FINISHED
    return session.state


def _advance_inflow(session: Session, dt: float) -> None:
    sv = session._state_vec
    code, contacts, _, _, _ = kernels.advance(
        session._gp,
        session._fl,
        session._a_ext,
        session._cp,
        session._ct,
        sv[0] + dt,
        session.scenario.limits.max_steps,
        sv,
        _EMPTY_T,
        _EMPTY_PV,
        0,
    )
    session.wall_contacts += int(contacts)
    state = session.state
    state.time = sv[0]
    state.position = sv[1:4].copy()
    state.velocity = sv[4:7].copy()
    state.region = classify_region(session.scenario.geometry, state.position)
    if code == kernels.OUT_FAILED:
        session.outcome = OUTCOME_FAILED
        session.error = "non-finite state during integration"
    elif code == kernels.OUT_A:
        session.outcome = "exited_A"
        state.region = REGION_EXITED_A
    elif code == kernels.OUT_B:
        session.outcome = "exited_B"
        state.region = REGION_EXITED_B


def _advance_rolling(session: Session, dt: float) -> None:
    scenario = session.scenario
    rotation = session.command.rotation_hz
    speed = rolling_velocity(scenario.rolling, scenario.capsule.diameter, abs(rotation))
    v = math.copysign(speed, rotation) if rotation != 0.0 else 0.0
    state = session.state
    state.position = state.position.copy()
    state.position[0] += v * dt
    state.velocity = np.array([v, 0.0, 0.0])
    state.time += dt
    session._state_vec[0] = state.time
    state.region = classify_region(scenario.geometry, state.position)
    if state.region == REGION_EXITED_A:
        session.outcome = "exited_A"
    elif state.region == REGION_EXITED_B:
        session.outcome = "exited_B"


def _advance_thermal(session: Session, dt: float) -> None:
    """Euler substeps of the lumped heater; cumulative melt time dissolves."""
    model = session.scenario.dissolution
    if model is None or dt <= 0.0:
        return
    heating = session.command.amf_on
    temp = session.temperature_c
    if not heating and temp == model.ambient_c:
        return
    fraction = session.state.dissolved_fraction
    power = model.heating_power_w if heating else 0.0
    remaining = dt
    while remaining > 0.0:
        h = min(DISSOLUTION_DT, remaining)
        remaining -= h
        d_temp = (power - model.loss_w_per_k * (temp - model.ambient_c)) / model.thermal_mass_j_per_k
        temp += d_temp * h
        if temp >= model.melt_c and fraction < 1.0:
            fraction = min(1.0, fraction + h / model.hold_s)
    session.temperature_c = temp
    session.state.dissolved_fraction = fraction


def snapshot_stream(session: Session, rate_hz: float):
    """Yield paced snapshots until the session finishes (then one terminal)."""
    if not 0.0 < rate_hz <= 120.0:
        raise InvalidParameterError("rate must be in (0, 120] Hz")
    period = 1.0 / rate_hz
    while True:
        snap = session.snapshot()
        yield snap
        if snap.status == STATUS_FINISHED:
            return
        time.sleep(period)


class SnapshotHub:
    """Fan-out of immutable snapshots; late subscribers get the latest first."""

    def __init__(self):
        self._lock = threading.Lock()
        self._latest = None
        self._queues: list[queue.SimpleQueue] = []

    def subscribe(self) -> queue.SimpleQueue:
        q = queue.SimpleQueue()
        with self._lock:
            if self._latest is not None:
                q.put(self._latest)
            self._queues.append(q)
        return q

    def unsubscribe(self, q: queue.SimpleQueue) -> None:
        with self._lock:
            if q in self._queues:
                self._queues.remove(q)

    def publish(self, item) -> None:
        with self._lock:
            self._latest = item
            for q in self._queues:
                q.put(item)


def encode_message(message: dict) -> str:
    return json.dumps(message, separators=(", ", ": ")) + "\n"


def parse_message(line: str) -> dict:
    try:
        message = json.loads(line)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"malformed protocol line: {exc.msg}") from None
    if not isinstance(message, dict) or "kind" not in message:
        raise FileFormatError("protocol messages are JSON objects with a kind")
    if message["kind"] not in ("hello", "command", "advance_mode", "state", "end"):
        raise FileFormatError(f"unknown message kind {message['kind']!r}")
    return message


def command_from_message(message: dict) -> SteeringCommand:
    try:
        direction = tuple(float(v) for v in message.get("field_direction", (1.0, 0.0, 0.0)))
        gradient = tuple(float(v) for v in message.get("gradient_tpm", (0.0, 0.0, 0.0)))
        if len(direction) != 3 or len(gradient) != 3:
            raise ValueError
        return SteeringCommand(
            field_magnitude_t=float(message.get("field_magnitude_t", 0.0)),
            field_direction=direction,
            gradient_tpm=gradient,
            amf_on=bool(message.get("amf_on", False)),
            rotation_hz=float(message.get("rotation_hz", 0.0)),
        )
    except (TypeError, ValueError):
        raise FileFormatError("malformed command message") from None


def command_ack_message(command: SteeringCommand) -> dict:
    return {
        "kind": "command",
        "acked": True,
        "field_magnitude_t": command.field_magnitude_t,
        "field_direction": list(command.field_direction),
        "gradient_tpm": list(command.gradient_tpm),
        "amf_on": command.amf_on,
        "rotation_hz": command.rotation_hz,
    }


def state_message(snapshot: Snapshot) -> dict:
    return {
        "kind": "state",
        "seq": snapshot.seq,
        "t": snapshot.time,
        "position": list(snapshot.position),
        "velocity": list(snapshot.velocity),
        "region": snapshot.region,
        "dissolved_fraction": snapshot.dissolved_fraction,
        "temperature_c": snapshot.temperature_c,
        "wall_contacts": snapshot.wall_contacts,
        "status": snapshot.status,
    }


def end_message(session: Session) -> dict:
    reason = "error" if session.outcome == OUTCOME_FAILED else session.outcome
    return {"kind": "end", "outcome": session.outcome, "t": session.state.time,
            "reason": reason}


def hello_message(session: Session, role: str) -> dict:
    scenario = session.scenario
    geometry = scenario.geometry
    return {
        "kind": "hello",
        "protocol": PROTOCOL_VERSION,
        "session": session.id,
        "role": role,
        "mode": scenario.mode,
        "status": session.status,
        "time_dilation": session.time_dilation,
        "envelope": {
            "max_field_t": scenario.envelope.max_field_t,
            "max_gradient_tpm": scenario.envelope.max_gradient_tpm,
        },
        "geometry": {
            "kind": geometry.kind,
            "diameter": geometry.diameter,
            "main_length": geometry.main_length,
            "branch_length": geometry.branch_length,
            "branch_angle": geometry.branch_angle,
        },
        "capsule": {
            "diameter": scenario.capsule.diameter,
            "density": scenario.capsule.density,
        },
        "flow": {
            "mean_velocity": scenario.flow.mean_velocity,
            "profile": scenario.flow.profile,
        },
    }


@dataclass(frozen=True)
class ScriptEvent:
    """A protocol message stamped with the simulation time it applies at."""

    at: float
    message: dict


def load_script(path: str) -> list[ScriptEvent]:
    """Script files are protocol JSON lines with an extra "t" stamp."""
    events = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            stripped = raw.strip()
            if stripped == "" or stripped.startswith("#"):
                continue
            try:
                message = parse_message(stripped)
            except FileFormatError as exc:
                raise FileFormatError(str(exc), path, lineno) from None
            if "t" not in message:
                raise FileFormatError("script events need a t stamp", path, lineno)
            if message["kind"] not in ("command", "advance_mode"):
                raise FileFormatError("scripts may contain command/advance_mode only",
                                      path, lineno)
            events.append(ScriptEvent(float(message.pop("t")), message))
    return sorted(events, key=lambda ev: ev.at)


def run_script(
    session: Session, events: list[ScriptEvent], until: float
) -> list[dict]:
    """Drive a session deterministically from stamped events; no wall clock.

    Stamps are simulation seconds. The session starts running; while an
    advance_mode event holds it paused, simulated time between stamps
    passes without physics. Returns the acknowledgement and end messages
    in order, for transcripting.
    """
    transcript = []
    session.status = STATUS_RUNNING
    pending = sorted(events, key=lambda ev: ev.at) + [ScriptEvent(until, {"kind": "end"})]
    for event in pending:
        target = min(event.at, until)
        if target > session.state.time:
            if session.status == STATUS_RUNNING:
                advance_physical(session, target - session.state.time)
            else:
                session.state.time = target
                session._state_vec[0] = target
        if session.status == STATUS_FINISHED or event.message["kind"] == "end":
            break
        if event.at > until:
            break
        if event.message["kind"] == "command":
            ack = apply_command(session, command_from_message(event.message))
            transcript.append(command_ack_message(ack))
        else:
            mode = set_mode(session, event.message.get("mode", STATUS_RUNNING))
            transcript.append({"kind": "advance_mode", "mode": mode, "acked": True})
    if session.status == STATUS_FINISHED:
        transcript.append(end_message(session))
    transcript.append(state_message(session.snapshot()))
    return transcript


class SessionServer:
    """Serves one session over TCP, WebSocket, and static HTTP on one port."""

    def __init__(
        self,
        scenario: Scenario,
        time_dilation: float = 100.0,
        host: str = "127.0.0.1",
        port: int = 0,
        snapshot_hz: float = 30.0,
        static_dir: str | None = None,
        autostart: bool = True,
    ):
        if not 0.0 < snapshot_hz <= 120.0:
            raise InvalidParameterError("snapshot_hz must be in (0, 120]")
        self.session = create_session(scenario, time_dilation)
        self.snapshot_hz = snapshot_hz
        self.static_dir = Path(static_dir) if static_dir is not None else None
        self.autostart = autostart
        self._hub = SnapshotHub()
        self._commands: queue.SimpleQueue = queue.SimpleQueue()
        self._stop = threading.Event()
        self._lock = threading.Lock()
        self._controller: int | None = None
        self._next_client = itertools.count(1)
        self._threads: list[threading.Thread] = []
        self._listener = socket.create_server((host, port))
        self.host, self.port = self._listener.getsockname()[:2]
        self._ended = False

    def start(self) -> None:
        for target in (self._accept_loop, self._tick_loop):
            thread = threading.Thread(target=target, daemon=True)
            thread.start()
            self._threads.append(thread)

    def stop(self) -> None:
        self._stop.set()
        try:
            self._listener.close()
        except OSError:
            pass
        for thread in self._threads:
            thread.join(timeout=2.0)

    def _claim_controller(self, client_id: int, wants_observer: bool) -> str:
        with self._lock:
            if not wants_observer and self._controller is None:
                self._controller = client_id
                return "controller"
            return "observer"

    def _release_controller(self, client_id: int) -> None:
        with self._lock:
            if self._controller == client_id:
                self._controller = None

    def _tick_loop(self) -> None:
        session = self.session
        if self.autostart:
            session.status = STATUS_RUNNING
        period = 1.0 / 120.0
        emit_every = max(1, round(120.0 / self.snapshot_hz))
        tick = 0
        last = time.monotonic()
        while not self._stop.is_set():
            time.sleep(period)
            now = time.monotonic()
            elapsed, last = now - last, now
            while True:
                try:
                    client_id, message = self._commands.get_nowait()
                except queue.Empty:
                    break
                self._apply_client_message(client_id, message)
            if session.status == STATUS_RUNNING:
                advance(session, elapsed)
            tick += 1
            if tick % emit_every == 0 or session.status == STATUS_FINISHED:
                self._hub.publish(encode_message(state_message(session.snapshot())))
            if session.status == STATUS_FINISHED and not self._ended:
                self._ended = True
                self._hub.publish(encode_message(end_message(session)))

    def _apply_client_message(self, client_id: int, message: dict) -> None:
        session = self.session
        if session.status == STATUS_FINISHED:
            return
        with self._lock:
            in_control = self._controller == client_id
        if not in_control:
            return
        try:
            if message["kind"] == "command":
                ack = apply_command(session, command_from_message(message))
                self._hub.publish(encode_message(command_ack_message(ack)))
            elif message["kind"] == "advance_mode":
                mode = set_mode(session, message.get("mode", STATUS_RUNNING))
                self._hub.publish(
                    encode_message({"kind": "advance_mode", "mode": mode, "acked": True})
                )
        except (InvalidParameterError, FileFormatError):
            pass

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                conn, _ = self._listener.accept()
            except OSError:
                return
            thread = threading.Thread(target=self._serve_client, args=(conn,), daemon=True)
            thread.start()
            self._threads.append(thread)

    def _serve_client(self, conn: socket.socket) -> None:
        conn.settimeout(10.0)
        reader = conn.makefile("rb")
        try:
            first = reader.readline()
            if not first:
                return
            if first.startswith(b"GET ") or first.startswith(b"POST "):
                self._serve_http(conn, reader, first)
            else:
                self._serve_raw(conn, reader, first)
        except (OSError, ValueError):
            pass
        finally:
            try:
                reader.close()
            except OSError:
                pass
            try:
                conn.close()
            except OSError:
                pass

    def _serve_raw(self, conn: socket.socket, reader, first: bytes) -> None:
        client_id = next(self._next_client)
        try:
            hello = parse_message(first.decode("utf-8"))
        except (FileFormatError, UnicodeDecodeError):
            return
        if hello.get("kind") != "hello":
            return
        role = self._claim_controller(client_id, hello.get("role") == "observer")
        conn.settimeout(None)
        conn.sendall(encode_message(hello_message(self.session, role)).encode("utf-8"))
        feed = self._hub.subscribe()
        writer = threading.Thread(
            target=self._pump_lines, args=(conn, feed), daemon=True
        )
        writer.start()
        try:
            for raw in reader:
                try:
                    message = parse_message(raw.decode("utf-8"))
                except (FileFormatError, UnicodeDecodeError):
                    continue
                self._commands.put((client_id, message))
        finally:
            self._release_controller(client_id)
            self._hub.unsubscribe(feed)
            feed.put(None)

    def _pump_lines(self, conn: socket.socket, feed: queue.SimpleQueue) -> None:
        while not self._stop.is_set():
            try:
                line = feed.get(timeout=0.5)
            except queue.Empty:
                continue
            if line is None:
                return
            try:
                conn.sendall(line.encode("utf-8"))
            except OSError:
                return

    def _serve_http(self, conn: socket.socket, reader, first: bytes) -> None:
        headers = {}
        while True:
            line = reader.readline()
            if not line or line in (b"\r\n", b"\n"):
                break
            name, _, value = line.decode("latin-1").partition(":")
            headers[name.strip().lower()] = value.strip()
        if headers.get("upgrade", "").lower() == "websocket":
            self._serve_websocket(conn, reader, headers)
        else:
            self._serve_static(conn, first)

    def _serve_websocket(self, conn: socket.socket, reader, headers: dict) -> None:
        key = headers.get("sec-websocket-key", "")
        accept = base64.b64encode(
            hashlib.sha1((key + _WS_GUID).encode("ascii")).digest()
        ).decode("ascii")
        conn.sendall(
            (
                "HTTP/1.1 101 Switching Protocols\r\n"
                "Upgrade: websocket\r\nConnection: Upgrade\r\n"
                f"Sec-WebSocket-Accept: {accept}\r\n\r\n"
            ).encode("ascii")
        )
        client_id = next(self._next_client)
        conn.settimeout(None)
        first = _ws_read_text(reader)
        role = "observer"
        if first is not None:
            try:
                hello = parse_message(first)
                if hello.get("kind") == "hello":
                    role = self._claim_controller(client_id, hello.get("role") == "observer")
            except FileFormatError:
                pass
        conn.sendall(_ws_text_frame(encode_message(hello_message(self.session, role))))
        feed = self._hub.subscribe()
        writer = threading.Thread(target=self._pump_frames, args=(conn, feed), daemon=True)
        writer.start()
        try:
            while True:
                text = _ws_read_text(reader)
                if text is None:
                    return
                try:
                    message = parse_message(text)
                except FileFormatError:
                    continue
                self._commands.put((client_id, message))
        finally:
            self._release_controller(client_id)
            self._hub.unsubscribe(feed)
            feed.put(None)

    def _pump_frames(self, conn: socket.socket, feed: queue.SimpleQueue) -> None:
        while not self._stop.is_set():
            try:
                line = feed.get(timeout=0.5)
            except queue.Empty:
                continue
            if line is None:
                return
            try:
                conn.sendall(_ws_text_frame(line))
            except OSError:
                return

    def _serve_static(self, conn: socket.socket, first: bytes) -> None:
        try:
            target = first.decode("latin-1").split(" ")[1]
        except IndexError:
            target = "/"
        target = target.split("?")[0]
        if target.endswith("/"):
            target += "index.html"
        body = b"not found"
        status = "404 Not Found"
        ctype = "text/plain"
        if self.static_dir is not None:
            root = self.static_dir.resolve()
            candidate = (root / target.lstrip("/")).resolve()
            if candidate.is_relative_to(root) and candidate.is_file():
                body = candidate.read_bytes()
                status = "200 OK"
                ctype = mimetypes.guess_type(candidate.name)[0] or "application/octet-stream"
        conn.sendall(
            (
                f"HTTP/1.1 {status}\r\nContent-Type: {ctype}\r\n"
                f"Content-Length: {len(body)}\r\nConnection: close\r\n\r\n"
            ).encode("latin-1")
            + body
        )


def _ws_read_text(reader) -> str | None:
    """One text payload from masked client frames; None on close/EOF."""
    fragments: list[bytes] = []
    while True:
        head = reader.read(2)
        if len(head) < 2:
            return None
        fin = head[0] & 0x80
        opcode = head[0] & 0x0F
        masked = head[1] & 0x80
        length = head[1] & 0x7F
        if length == 126:
            length = int.from_bytes(reader.read(2), "big")
        elif length == 127:
            length = int.from_bytes(reader.read(8), "big")
        mask = reader.read(4) if masked else b""
        payload = reader.read(length)
        if masked:
            payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        if opcode == 0x8:
            return None
        if opcode in (0x9, 0xA):
            continue
        fragments.append(payload)
        if fin:
            return b"".join(fragments).decode("utf-8", errors="replace")


def _ws_text_frame(text: str) -> bytes:
    payload = text.encode("utf-8")
    length = len(payload)
    if length < 126:
        head = bytes([0x81, length])
    elif length < 65536:
        head = bytes([0x81, 126]) + length.to_bytes(2, "big")
    else:
        head = bytes([0x81, 127]) + length.to_bytes(8, "big")
    return head + payload
