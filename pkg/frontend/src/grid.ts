/** Pure reducer keeping the canvas grid in lockstep with server events.
 *
 * Slots are positional and never shuffle; offspring events swap the
 * contents of exactly the named slot and flag it for recompilation.
 */

import type { PopulationView, StudioEvent } from './api.js';

export interface SlotState {
  slot: number;
  genomeId: string;
  source: string;
  selected: boolean;
  needsRecompile: boolean;
  restartClock: boolean;
}

export interface GridState {
  sessionId: string;
  generation: number;
  evolving: boolean;
  progressDone: number;
  progressTotal: number;
  fullscreenSlot: number | null;
  lastError: string | null;
  slots: SlotState[];
}

export function initialGrid(view: PopulationView): GridState {
  return {
    sessionId: view.session_id,
    generation: view.generation,
    evolving: view.evolving,
    progressDone: 0,
    progressTotal: 0,
    fullscreenSlot: null,
    lastError: null,
    slots: view.genomes.map((g) => ({
      slot: g.slot,
      genomeId: g.id,
      source: g.full_source,
      selected: g.selected,
      needsRecompile: true,
      restartClock: true,
    })),
  };
}

export function selectionCount(state: GridState): number {
  return state.slots.filter((s) => s.selected).length;
}

function withSlot(
  state: GridState,
  slot: number,
  update: (s: SlotState) => SlotState,
): GridState {
  return {
    ...state,
    slots: state.slots.map((s) => (s.slot === slot ? update(s) : s)),
  };
}

export function applyEvent(state: GridState, event: StudioEvent): GridState {
  const p = event.payload;
  switch (event.kind) {
    case 'population_updated': {
      if (p.reason === 'selection') {
        return withSlot(state, p.slot as number, (s) => ({
          ...s,
          selected: p.selected as boolean,
        }));
      }
      return state;
    }
    case 'evolve_started':
      return {
        ...state,
        evolving: true,
        progressDone: 0,
        progressTotal: p.replaceable as number,
        lastError: null,
      };
    case 'offspring_ready':
      return withSlot(
        { ...state, progressDone: p.progress as number },
        p.slot as number,
        (s) => ({
          ...s,
          genomeId: p.id as string,
          source: p.full_source as string,
          selected: false,
          needsRecompile: true,
          restartClock: true,
        }),
      );
    case 'evolve_finished':
      return {
        ...state,
        evolving: false,
        generation: p.generation as number,
      };
    case 'error':
      return { ...state, evolving: false, lastError: p.message as string };
    default:
      return state;
  }
}

export function toggleFullscreen(
  state: GridState,
  slot: number | null,
): GridState {
  return { ...state, fullscreenSlot: slot };
}

/** Slots flagged by offspring swaps; clearing is the renderer's ack. */
export function slotsNeedingRecompile(state: GridState): number[] {
  return state.slots.filter((s) => s.needsRecompile).map((s) => s.slot);
}

export function markRecompiled(state: GridState, slot: number): GridState {
  return withSlot(state, slot, (s) => ({
    ...s,
    needsRecompile: false,
    restartClock: false,
  }));
}
