/** DOM wiring: grid of canvases, gesture handling, controls, live
 * audio, and the event stream that keeps everything in sync. */

import { parseEvent, StudioApi, StudioEvent } from './api.js';
import { LiveAudioLoop, encodeWavPcm16 } from './audio.js';
import { deriveControls } from './controls.js';
import {
  applyEvent,
  GridState,
  initialGrid,
  markRecompiled,
  slotsNeedingRecompile,
  toggleFullscreen,
} from './grid.js';
import { PressTracker } from './gestures.js';
import { SlotRenderer } from './renderer.js';

const api = new StudioApi();
const audio = new LiveAudioLoop();
const tracker = new PressTracker();

let state: GridState;
let renderers: SlotRenderer[] = [];
let canvases: HTMLCanvasElement[] = [];

const grid = document.getElementById('grid') as HTMLDivElement;
const evolveButton = document.getElementById('evolve') as HTMLButtonElement;
const downloadButton = document.getElementById('download') as HTMLButtonElement;
const statusLine = document.getElementById('status') as HTMLSpanElement;
const audioInput = document.getElementById('audio') as HTMLInputElement;
const chrome = document.getElementById('chrome') as HTMLDivElement;

function nowSeconds(): number {
  return performance.now() / 1000;
}

function buildGrid(): void {
  grid.innerHTML = '';
  canvases = [];
  renderers = [];
  for (const slot of state.slots) {
    const cell = document.createElement('div');
    cell.className = 'cell';
    const canvas = document.createElement('canvas');
    canvas.width = 320;
    canvas.height = 180;
    cell.appendChild(canvas);
    grid.appendChild(cell);
    canvases.push(canvas);
    renderers.push(new SlotRenderer(canvas, nowSeconds()));

    canvas.addEventListener('pointerdown', () => {
      tracker.pressStart(slot.slot, nowSeconds());
    });
    canvas.addEventListener('pointerup', () => handleRelease());
    canvas.addEventListener('pointerleave', () => tracker.cancel());
  }
}

function handleRelease(): void {
  const action = tracker.pressEnd(nowSeconds());
  if (action.kind === 'toggle-select') {
    const slot = state.slots[action.slot];
    api.setSelection(state.sessionId, slot.genomeId, !slot.selected);
  } else if (action.kind === 'exit-fullscreen') {
    state = toggleFullscreen(state, null);
    applyFullscreen();
  }
}

function applyFullscreen(): void {
  const active = state.fullscreenSlot;
  chrome.classList.toggle('hidden', active !== null);
  canvases.forEach((canvas, slot) => {
    canvas.parentElement!.classList.toggle('hidden', active !== null && slot !== active);
    canvas.classList.toggle('fullscreen', slot === active);
  });
}

function render(): void {
  // fullscreen entry fires while the press is still held
  const held = tracker.check(nowSeconds());
  if (held.kind === 'enter-fullscreen') {
    state = toggleFullscreen(state, held.slot);
    applyFullscreen();
  }

  for (const slot of slotsNeedingRecompile(state)) {
    try {
      renderers[slot].compile(state.slots[slot].source, nowSeconds());
    } catch (error) {
      console.warn(`slot ${slot} failed to compile client-side`, error);
    }
    state = markRecompiled(state, slot);
  }

  const level = audio.level();
  renderers.forEach((renderer, slot) => {
    if (state.fullscreenSlot === null || state.fullscreenSlot === slot) {
      renderer.renderFrame(nowSeconds(), level);
    }
  });

  canvases.forEach((canvas, slot) => {
    canvas.parentElement!.classList.toggle('selected', state.slots[slot].selected);
  });

  const controls = deriveControls(state);
  evolveButton.disabled = !controls.evolveEnabled;
  downloadButton.disabled = !controls.downloadEnabled;
  statusLine.textContent = controls.statusText;

  requestAnimationFrame(render);
}

function onEvent(event: StudioEvent): void {
  state = applyEvent(state, event);
}

async function start(): Promise<void> {
  const view = await api.createSession();
  state = initialGrid(view);
  buildGrid();

  const source = api.openEvents(state.sessionId);
  for (const kind of [
    'population_updated',
    'evolve_started',
    'offspring_ready',
    'evolve_finished',
    'error',
  ]) {
    source.addEventListener(kind, (e) =>
      onEvent(parseEvent(kind, (e as MessageEvent).data)),
    );
  }

  evolveButton.addEventListener('click', () => {
    api.triggerEvolve(state.sessionId).catch((error) => {
      statusLine.textContent = `error: ${error.message}`;
    });
  });

  downloadButton.addEventListener('click', async () => {
    const bundle = await api.exportSelected(state.sessionId);
    const blob = new Blob([bundle], { type: 'text/plain' });
    const link = document.createElement('a');
    link.href = URL.createObjectURL(blob);
    link.download = 'selected-shaders.txt';
    link.click();
    URL.revokeObjectURL(link.href);
  });

  audioInput.addEventListener('change', async () => {
    const file = audioInput.files?.[0];
    if (!file) return;
    const buffer = await audio.load(file);
    const wav = encodeWavPcm16(
      LiveAudioLoop.monoSamples(buffer),
      buffer.sampleRate,
    );
    await api.uploadAudio(state.sessionId, wav);
  });

  requestAnimationFrame(render);
}

start().catch((error) => {
  statusLine.textContent = `failed to start: ${error.message}`;
});
