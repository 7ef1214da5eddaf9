/** Per-slot WebGL rendering: each canvas owns a context, a compiled
 * program, and an animation clock. The uniform plumbing and frame-skip
 * gating are factored out so they can be exercised without a GPU.
 */

const VERTEX_SOURCE = `attribute vec2 position;
void main() {
  gl_Position = vec4(position, 0.0, 1.0);
}`;

export const FRAME_TIME_CAP_MS = 33;

/** u_audio goes to the GPU clamped; bad values (NaN included) become 0. */
export function clampAudio(value: number): number {
  if (!Number.isFinite(value)) return 0;
  return Math.min(Math.max(value, 0), 1);
}

export class SlotClock {
  private startedAt: number;

  constructor(now: number) {
    this.startedAt = now;
  }

  restart(now: number): void {
    this.startedAt = now;
  }

  elapsed(now: number): number {
    return now - this.startedAt;
  }
}

/** Skips a frame when the previous one blew the per-frame budget, so a
 * heavy shader degrades to half rate instead of stalling the grid. */
export class FrameGate {
  private lastDuration = 0;
  private skippedLast = false;

  constructor(private capMs: number = FRAME_TIME_CAP_MS) {}

  shouldSkip(): boolean {
    if (this.lastDuration > this.capMs && !this.skippedLast) {
      this.skippedLast = true;
      return true;
    }
    return false;
  }

  recordFrame(durationMs: number): void {
    this.lastDuration = durationMs;
    this.skippedLast = false;
  }
}

export interface UniformSink {
  setUniforms(iTime: number, iResolution: [number, number], uAudio: number): void;
  draw(): void;
}

/** One animation tick for one slot; returns false when gated. */
export function renderSlotFrame(
  sink: UniformSink,
  clock: SlotClock,
  gate: FrameGate,
  nowSeconds: number,
  resolution: [number, number],
  audioValue: number,
  frameDurationMs = 0,
): boolean {
  if (gate.shouldSkip()) {
    return false;
  }
  sink.setUniforms(clock.elapsed(nowSeconds), resolution, clampAudio(audioValue));
  sink.draw();
  gate.recordFrame(frameDurationMs);
  return true;
}

export class CompileError extends Error {}

export function compileProgram(
  gl: WebGLRenderingContext,
  fragmentSource: string,
): WebGLProgram {
  const compile = (type: number, source: string): WebGLShader => {
    const shader = gl.createShader(type)!;
    gl.shaderSource(shader, source);
    gl.compileShader(shader);
    if (!gl.getShaderParameter(shader, gl.COMPILE_STATUS)) {
      const log = gl.getShaderInfoLog(shader) ?? 'unknown compile error';
      gl.deleteShader(shader);
      throw new CompileError(log);
    }
    return shader;
  };
  const program = gl.createProgram()!;
  gl.attachShader(program, compile(gl.VERTEX_SHADER, VERTEX_SOURCE));
  gl.attachShader(program, compile(gl.FRAGMENT_SHADER, fragmentSource));
  gl.linkProgram(program);
  if (!gl.getProgramParameter(program, gl.LINK_STATUS)) {
    throw new CompileError(gl.getProgramInfoLog(program) ?? 'link failed');
  }
  return program;
}

/** Owns one canvas: (re)compiles wrapped sources and draws frames. */
export class SlotRenderer implements UniformSink {
  private gl: WebGLRenderingContext;
  private program: WebGLProgram | null = null;
  readonly clock: SlotClock;
  readonly gate = new FrameGate();

  constructor(private canvas: HTMLCanvasElement, now: number) {
    const gl = canvas.getContext('webgl');
    if (!gl) throw new CompileError('WebGL unavailable');
    this.gl = gl;
    this.clock = new SlotClock(now);
    const quad = gl.createBuffer();
    gl.bindBuffer(gl.ARRAY_BUFFER, quad);
    gl.bufferData(
      gl.ARRAY_BUFFER,
      new Float32Array([-1, -1, 3, -1, -1, 3]),
      gl.STATIC_DRAW,
    );
  }

  compile(fragmentSource: string, now: number): void {
    if (this.program) this.gl.deleteProgram(this.program);
    this.program = compileProgram(this.gl, fragmentSource);
    const position = this.gl.getAttribLocation(this.program, 'position');
    this.gl.enableVertexAttribArray(position);
    this.gl.vertexAttribPointer(position, 2, this.gl.FLOAT, false, 0, 0);
    this.clock.restart(now);
  }

  setUniforms(iTime: number, iResolution: [number, number], uAudio: number): void {
    if (!this.program) return;
    const gl = this.gl;
    gl.useProgram(this.program);
    gl.uniform1f(gl.getUniformLocation(this.program, 'iTime'), iTime);
    gl.uniform2f(
      gl.getUniformLocation(this.program, 'iResolution'),
      iResolution[0],
      iResolution[1],
    );
    gl.uniform1f(gl.getUniformLocation(this.program, 'u_audio'), uAudio);
  }

  draw(): void {
    if (!this.program) return;
    const gl = this.gl;
    gl.viewport(0, 0, this.canvas.width, this.canvas.height);
    gl.drawArrays(gl.TRIANGLES, 0, 3);
  }

  renderFrame(now: number, audioValue: number): boolean {
    if (!this.program) return false;
    const started = performance.now();
    const drew = renderSlotFrame(
      this,
      this.clock,
      this.gate,
      now,
      [this.canvas.width, this.canvas.height],
      audioValue,
    );
    if (drew) this.gate.recordFrame(performance.now() - started);
    return drew;
  }
}

/** Recompiles exactly the slots the grid reducer flagged. */
export function syncRecompiles(
  flagged: number[],
  compileSlot: (slot: number) => void,
): number[] {
  for (const slot of flagged) compileSlot(slot);
  return flagged;
}
