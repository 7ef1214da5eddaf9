import { describe, expect, it } from 'vitest';

import {
  LONG_PRESS_SECONDS,
  PressTracker,
  resolvePress,
} from '../src/gestures.js';

describe('press gestures', () => {
  it('a 0.2 s press toggles selection', () => {
    const tracker = new PressTracker();
    tracker.pressStart(3, 10.0);
    expect(tracker.check(10.1).kind).toBe('none');
    expect(tracker.pressEnd(10.2)).toEqual({ kind: 'toggle-select', slot: 3 });
  });

  it('a 2.0 s hold enters fullscreen at the threshold and exits on release', () => {
    const tracker = new PressTracker();
    tracker.pressStart(7, 0.0);
    expect(tracker.check(1.0).kind).toBe('none');
    expect(tracker.check(1.6)).toEqual({ kind: 'enter-fullscreen', slot: 7 });
    // entry fires exactly once while held
    expect(tracker.check(1.9).kind).toBe('none');
    expect(tracker.pressEnd(2.0)).toEqual({ kind: 'exit-fullscreen', slot: 7 });
  });

  it('exactly the 1.5 s boundary counts as a long press', () => {
    expect(LONG_PRESS_SECONDS).toBe(1.5);
    expect(resolvePress(0, 1.5).kind).toBe('exit-fullscreen');
    expect(resolvePress(0, 1.4999).kind).toBe('toggle-select');

    const tracker = new PressTracker();
    tracker.pressStart(0, 0.0);
    expect(tracker.check(1.5)).toEqual({ kind: 'enter-fullscreen', slot: 0 });
  });

  it('release after threshold exits even without a poll in between', () => {
    const tracker = new PressTracker();
    tracker.pressStart(2, 0.0);
    expect(tracker.pressEnd(2.0)).toEqual({ kind: 'exit-fullscreen', slot: 2 });
  });

  it('a cancelled press resolves to nothing', () => {
    const tracker = new PressTracker();
    tracker.pressStart(1, 0.0);
    tracker.cancel();
    expect(tracker.pressEnd(0.1).kind).toBe('none');
    expect(tracker.holding).toBe(false);
  });
});
