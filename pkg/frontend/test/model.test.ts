import { describe, expect, it } from "vitest";

import { CommandThrottle, ConsoleModel } from "../src/model.js";
import { CommandMsg, HelloMsg, StateMsg } from "../src/protocol.js";

function hello(overrides: Partial<HelloMsg> = {}): HelloMsg {
  return {
    kind: "hello",
    protocol: 1,
    session: 1,
    role: "controller",
    mode: "inflow",
    status: "paused",
    time_dilation: 100,
    envelope: { max_field_t: 0.03, max_gradient_tpm: 1.0 },
    geometry: {
      kind: "y_junction",
      diameter: 0.005,
      main_length: 0.096,
      branch_length: 0.046,
      branch_angle: Math.PI / 2,
    },
    capsule: { diameter: 0.0014, density: 3187.74 },
    flow: { mean_velocity: 0.65, profile: "power_law" },
    ...overrides,
  };
}

function state(seq: number, t: number, overrides: Partial<StateMsg> = {}): StateMsg {
  return {
    kind: "state",
    seq,
    t,
    position: [t, 0, 0],
    velocity: [0.6, 0, 0],
    region: "main",
    dissolved_fraction: 0,
    temperature_c: 20,
    wall_contacts: 0,
    status: "running",
    ...overrides,
  };
}

function ack(overrides: Partial<CommandMsg> = {}): CommandMsg {
  return {
    kind: "command",
    acked: true,
    field_magnitude_t: 0.03,
    field_direction: [1, 0, 0],
    gradient_tpm: [0, 1, 0],
    amf_on: false,
    rotation_hz: 0,
    ...overrides,
  };
}

describe("ConsoleModel snapshot ordering", () => {
  it("keeps snapshots monotone and drops stale packets", () => {
    const model = new ConsoleModel();
    model.ingest(hello());
    expect(model.ingest(state(1, 0.1))).toBe(true);
    expect(model.ingest(state(3, 0.3))).toBe(true);
    expect(model.ingest(state(2, 0.2))).toBe(false);
    expect(model.latest!.seq).toBe(3);
    expect(model.staleDropped).toBe(1);
    expect(model.trace.length).toBe(2);
  });

  it("drops a replayed seq even if the time looks fresh", () => {
    const model = new ConsoleModel();
    model.ingest(state(5, 0.5));
    expect(model.ingest(state(5, 0.9))).toBe(false);
    expect(model.latest!.t).toBe(0.5);
  });

  it("bounds the trace length", () => {
    const model = new ConsoleModel(10);
    for (let i = 1; i <= 50; i++) model.ingest(state(i, i / 100));
    expect(model.trace.length).toBe(10);
    expect(model.trace[9][0]).toBeCloseTo(0.5);
  });
});

describe("ConsoleModel command display", () => {
  it("shows only acked commands", () => {
    const model = new ConsoleModel();
    const request = ack({ acked: undefined, gradient_tpm: [0, 2, 0] });
    expect(model.ingest(request)).toBe(false);
    expect(model.effective).toBeNull();
    model.ingest(ack());
    expect(model.effective!.gradient_tpm).toEqual([0, 1, 0]);
  });

  it("tracks pause state from acked mode changes", () => {
    const model = new ConsoleModel();
    model.ingest(hello());
    model.ingest({ kind: "advance_mode", mode: "running", acked: true });
    expect(model.mode).toBe("running");
    model.ingest({ kind: "advance_mode", mode: "paused", acked: true });
    expect(model.mode).toBe("paused");
  });
});

describe("ConsoleModel outcome banner", () => {
  it("celebrates the targeted branch and flags a miss", () => {
    const model = new ConsoleModel();
    model.targetBranch = "A";
    model.ingest({ kind: "end", outcome: "exited_A", t: 0.2, reason: "exited_A" });
    expect(model.banner()!.good).toBe(true);
    expect(model.status).toBe("finished");

    const missed = new ConsoleModel();
    missed.targetBranch = "A";
    missed.ingest({ kind: "end", outcome: "exited_B", t: 0.2, reason: "exited_B" });
    expect(missed.banner()!.good).toBe(false);
    expect(missed.banner()!.text).toContain("B");
  });

  it("reports dissolution as success", () => {
    const model = new ConsoleModel();
    model.ingest({ kind: "end", outcome: "dissolved", t: 45, reason: "dissolved" });
    expect(model.banner()!.good).toBe(true);
  });
});

describe("CommandThrottle", () => {
  const request = {
    field_magnitude_t: 0.03,
    field_direction: [1, 0, 0] as [number, number, number],
    gradient_tpm: [0, 0, 0] as [number, number, number],
    amf_on: false,
    rotation_hz: 0,
  };

  it("lets at most one command through per period", () => {
    const throttle = new CommandThrottle(50);
    expect(throttle.offer(request, 0)).not.toBeNull();
    expect(throttle.offer(request, 10)).toBeNull();
    expect(throttle.offer(request, 49)).toBeNull();
    expect(throttle.offer(request, 50)).not.toBeNull();
  });

  it("sends the newest pending command once the period elapses", () => {
    const throttle = new CommandThrottle(50);
    throttle.offer(request, 0);
    throttle.offer({ ...request, rotation_hz: 1 }, 10);
    throttle.offer({ ...request, rotation_hz: 2 }, 20);
    expect(throttle.due(30)).toBeNull();
    const sent = throttle.due(55);
    expect(sent).not.toBeNull();
    expect(sent!.rotation_hz).toBe(2);
    expect(throttle.due(60)).toBeNull();
  });

  it("stays under 20 Hz for a 50 ms period under a drag storm", () => {
    const throttle = new CommandThrottle(50);
    let sent = 0;
    for (let ms = 0; ms < 1000; ms += 5) {
      if (throttle.offer(request, ms)) sent += 1;
      if (throttle.due(ms)) sent += 1;
    }
    expect(sent).toBeLessThanOrEqual(20);
    expect(sent).toBeGreaterThanOrEqual(19);
  });
});
