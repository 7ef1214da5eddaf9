/** Press handling: short click toggles selection, holding past the
 * threshold enters fullscreen, and releasing a long press exits it.
 *
 * The tracker is clock-driven (callers pass timestamps in seconds), so
 * the render loop polls `check` each frame instead of arming timers.
 */

export const LONG_PRESS_SECONDS = 1.5;

export type PressAction =
  | { kind: 'toggle-select'; slot: number }
  | { kind: 'enter-fullscreen'; slot: number }
  | { kind: 'exit-fullscreen'; slot: number }
  | { kind: 'none' };

interface ActivePress {
  slot: number;
  startedAt: number;
  fullscreenEntered: boolean;
}

export class PressTracker {
  private active: ActivePress | null = null;

  constructor(private threshold = LONG_PRESS_SECONDS) {}

  pressStart(slot: number, now: number): void {
    this.active = { slot, startedAt: now, fullscreenEntered: false };
  }

  /** Poll once per frame while a press is held; fires fullscreen entry
   * exactly once when the hold crosses the threshold. */
  check(now: number): PressAction {
    if (!this.active || this.active.fullscreenEntered) {
      return { kind: 'none' };
    }
    if (now - this.active.startedAt >= this.threshold) {
      this.active.fullscreenEntered = true;
      return { kind: 'enter-fullscreen', slot: this.active.slot };
    }
    return { kind: 'none' };
  }

  pressEnd(now: number): PressAction {
    if (!this.active) return { kind: 'none' };
    const { slot, startedAt, fullscreenEntered } = this.active;
    this.active = null;
    const longPress = fullscreenEntered || now - startedAt >= this.threshold;
    return longPress
      ? { kind: 'exit-fullscreen', slot }
      : { kind: 'toggle-select', slot };
  }

  cancel(): void {
    this.active = null;
  }

  get holding(): boolean {
    return this.active !== null;
  }
}

/** Resolve a completed press of known duration (the >= rule puts the
 * exact threshold on the long-press side). */
export function resolvePress(slot: number, durationSeconds: number): PressAction {
  return durationSeconds >= LONG_PRESS_SECONDS
    ? { kind: 'exit-fullscreen', slot }
    : { kind: 'toggle-select', slot };
}
