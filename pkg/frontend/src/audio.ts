/** Live audio: a 32-bin analyser feeding one scalar per frame, plus the
 * PCM16 WAV encoder used to forward decoded uploads to the server for
 * the canonical timeline. Silence maps to 0, everything lands in [0,1].
 */

export const ANALYSER_FFT_SIZE = 64; // 32 frequency bins

/** Mean byte magnitude mapped into [0, 1]. */
export function audioLevelFromBytes(bins: Uint8Array): number {
  if (bins.length === 0) return 0;
  let total = 0;
  for (let i = 0; i < bins.length; i++) total += bins[i];
  const level = total / bins.length / 255;
  return Math.min(Math.max(level, 0), 1);
}

export function encodeWavPcm16(
  samples: Float32Array,
  sampleRate: number,
): ArrayBuffer {
  const data = new ArrayBuffer(44 + samples.length * 2);
  const view = new DataView(data);
  const writeTag = (offset: number, tag: string) => {
    for (let i = 0; i < tag.length; i++) {
      view.setUint8(offset + i, tag.charCodeAt(i));
    }
  };
  writeTag(0, 'RIFF');
  view.setUint32(4, 36 + samples.length * 2, true);
  writeTag(8, 'WAVE');
  writeTag(12, 'fmt ');
  view.setUint32(16, 16, true);
  view.setUint16(20, 1, true); // PCM
  view.setUint16(22, 1, true); // mono
  view.setUint32(24, sampleRate, true);
  view.setUint32(28, sampleRate * 2, true);
  view.setUint16(32, 2, true);
  view.setUint16(34, 16, true);
  writeTag(36, 'data');
  view.setUint32(40, samples.length * 2, true);
  for (let i = 0; i < samples.length; i++) {
    const clamped = Math.min(Math.max(samples[i], -1), 1);
    view.setInt16(44 + i * 2, Math.round(clamped * 32767), true);
  }
  return data;
}

/** Decodes an uploaded file, plays it, and exposes the per-frame level. */
export class LiveAudioLoop {
  private context: AudioContext | null = null;
  private analyser: AnalyserNode | null = null;
  private bins: Uint8Array<ArrayBuffer> | null = null;

  async load(file: File): Promise<AudioBuffer> {
    this.context ??= new AudioContext();
    const buffer = await this.context.decodeAudioData(await file.arrayBuffer());
    const source = this.context.createBufferSource();
    source.buffer = buffer;
    this.analyser = this.context.createAnalyser();
    this.analyser.fftSize = ANALYSER_FFT_SIZE;
    source.connect(this.analyser);
    this.analyser.connect(this.context.destination);
    source.start();
    this.bins = new Uint8Array(this.analyser.frequencyBinCount);
    return buffer;
  }

  /** Current audio level; 0 until a file is playing. */
  level(): number {
    if (!this.analyser || !this.bins) return 0;
    this.analyser.getByteFrequencyData(this.bins);
    return audioLevelFromBytes(this.bins);
  }

  /** Mono PCM of a decoded buffer, ready for encodeWavPcm16. */
  static monoSamples(buffer: AudioBuffer): Float32Array {
    const mono = new Float32Array(buffer.length);
    for (let ch = 0; ch < buffer.numberOfChannels; ch++) {
      const channel = buffer.getChannelData(ch);
      for (let i = 0; i < channel.length; i++) {
        mono[i] += channel[i] / buffer.numberOfChannels;
      }
    }
    return mono;
  }
}
