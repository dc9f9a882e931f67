import { describe, expect, it } from "vitest";

import { KeyboardTeleop, TeleopStreamer, isTeleopKey, zeroCommand } from "../src/input.js";

describe("KeyboardTeleop", () => {
  it("maps W to full surge", () => {
    const kb = new KeyboardTeleop();
    kb.keyDown("KeyW");
    expect(kb.axes()).toEqual([1000, 0, 0, 0, 0, 0]);
  });

  it("maps all six axes with roll/pitch pinned to zero", () => {
    const kb = new KeyboardTeleop();
    for (const code of ["KeyS", "KeyA", "KeyF", "KeyQ"]) kb.keyDown(code);
    expect(kb.axes()).toEqual([-1000, 1000, -1000, 0, 0, 1000]);
  });

  it("opposing keys cancel", () => {
    const kb = new KeyboardTeleop();
    kb.keyDown("KeyW");
    kb.keyDown("KeyS");
    expect(kb.axes()[0]).toBe(0);
  });

  it("release zeroes the axis", () => {
    const kb = new KeyboardTeleop();
    kb.keyDown("KeyE");
    kb.keyUp("KeyE");
    expect(kb.axes()).toEqual([0, 0, 0, 0, 0, 0]);
    expect(kb.anyHeld()).toBe(false);
  });

  it("ignores non-teleop keys", () => {
    const kb = new KeyboardTeleop();
    kb.keyDown("KeyZ");
    expect(kb.anyHeld()).toBe(false);
    expect(isTeleopKey("KeyZ")).toBe(false);
    expect(isTeleopKey("KeyW")).toBe(true);
  });
});

describe("TeleopStreamer", () => {
  it("streams at every tick while held, to the selected robot only", () => {
    const kb = new KeyboardTeleop();
    const streamer = new TeleopStreamer();
    kb.keyDown("KeyW");
    for (let k = 0; k < 5; k++) {
      const cmds = streamer.tick(2, true, kb);
      expect(cmds).toHaveLength(1);
      expect(cmds[0].robot).toBe(2);
      expect(cmds[0].axes[0]).toBe(1000);
    }
  });

  it("sends one zeroing command on release then goes quiet", () => {
    const kb = new KeyboardTeleop();
    const streamer = new TeleopStreamer();
    kb.keyDown("KeyW");
    streamer.tick(0, true, kb);
    kb.keyUp("KeyW");
    expect(streamer.tick(0, true, kb)).toEqual([zeroCommand(0)]);
    expect(streamer.tick(0, true, kb)).toEqual([]);
    expect(streamer.tick(0, true, kb)).toEqual([]);
  });

  it("zeroes the old robot first when switching mid-hold", () => {
    const kb = new KeyboardTeleop();
    const streamer = new TeleopStreamer();
    kb.keyDown("KeyW");
    streamer.tick(0, true, kb);
    const cmds = streamer.tick(1, true, kb);
    expect(cmds[0]).toEqual(zeroCommand(0));
    expect(cmds[1].robot).toBe(1);
    // and never again addresses robot 0
    for (let k = 0; k < 3; k++) {
      for (const c of streamer.tick(1, true, kb)) expect(c.robot).toBe(1);
    }
  });

  it("suppresses teleop while disarmed", () => {
    const kb = new KeyboardTeleop();
    const streamer = new TeleopStreamer();
    kb.keyDown("KeyW");
    expect(streamer.tick(0, false, kb)).toEqual([]);
    expect(streamer.tick(0, false, kb)).toEqual([]);
  });

  it("zeroes once if the robot disarms mid-hold", () => {
    const kb = new KeyboardTeleop();
    const streamer = new TeleopStreamer();
    kb.keyDown("KeyW");
    streamer.tick(0, true, kb);
    const cmds = streamer.tick(0, false, kb);
    expect(cmds).toEqual([zeroCommand(0)]);
    expect(streamer.tick(0, false, kb)).toEqual([]);
  });
});
