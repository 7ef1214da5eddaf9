/** Button enablement and progress display derived from grid state. */

import { GridState, selectionCount } from './grid.js';

export interface ControlState {
  evolveEnabled: boolean;
  downloadEnabled: boolean;
  progressText: string;
  statusText: string;
}

export function deriveControls(state: GridState): ControlState {
  const selected = selectionCount(state);
  const evolveEnabled = selected >= 1 && !state.evolving;
  const downloadEnabled = selected >= 1;
  const progressText = state.evolving
    ? `${state.progressDone}/${state.progressTotal}`
    : '';
  let statusText = `generation ${state.generation} — ${selected} selected`;
  if (state.evolving) {
    statusText = `evolving… ${state.progressDone}/${state.progressTotal}`;
  } else if (state.lastError) {
    statusText = `error: ${state.lastError}`;
  }
  return { evolveEnabled, downloadEnabled, progressText, statusText };
}
