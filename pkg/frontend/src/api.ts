/** Typed client for the studio's HTTP and event-stream endpoints. */

export interface GenomeView {
  slot: number;
  id: string;
  code: string;
  full_source: string;
  selected: boolean;
  operator: string;
  generation: number;
}

export interface PopulationView {
  session_id: string;
  generation: number;
  size: number;
  evolving: boolean;
  genomes: GenomeView[];
}

export type EventKind =
  | 'population_updated'
  | 'evolve_started'
  | 'offspring_ready'
  | 'evolve_finished'
  | 'error';

export interface StudioEvent {
  seq: number;
  kind: EventKind;
  payload: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function expectOk(response: Response): Promise<Response> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      detail = (await response.json()).detail ?? detail;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(response.status, detail);
  }
  return response;
}

export class StudioApi {
  constructor(
    private baseUrl = '',
    private fetchFn: typeof fetch = fetch.bind(globalThis),
  ) {}

  private url(path: string): string {
    return `${this.baseUrl}/api${path}`;
  }

  async createSession(sessionId?: string): Promise<PopulationView> {
    const response = await this.fetchFn(this.url('/sessions'), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ session_id: sessionId ?? null }),
    });
    return (await expectOk(response)).json();
  }

  async getPopulation(sessionId: string): Promise<PopulationView> {
    const response = await this.fetchFn(this.url(`/sessions/${sessionId}`));
    return (await expectOk(response)).json();
  }

  async setSelection(
    sessionId: string,
    genomeId: string,
    selected: boolean,
  ): Promise<void> {
    const response = await this.fetchFn(
      this.url(`/sessions/${sessionId}/selection`),
      {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({ genome_id: genomeId, selected }),
      },
    );
    await expectOk(response);
  }

  async triggerEvolve(sessionId: string): Promise<string> {
    const response = await this.fetchFn(
      this.url(`/sessions/${sessionId}/evolve`),
      {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({ background: true }),
      },
    );
    return (await expectOk(response)).json().then((b) => b.evolve_id);
  }

  async uploadAudio(
    sessionId: string,
    wavBytes: ArrayBuffer,
  ): Promise<{ timeline_id: string; frames: number }> {
    const response = await this.fetchFn(
      this.url(`/sessions/${sessionId}/audio`),
      { method: 'POST', body: wavBytes },
    );
    return (await expectOk(response)).json();
  }

  async exportSelected(sessionId: string): Promise<string> {
    const response = await this.fetchFn(
      this.url(`/sessions/${sessionId}/export`),
    );
    return (await expectOk(response)).text();
  }

  /** Open the server-sent-event stream; the caller owns the source. */
  openEvents(sessionId: string, after = 0): EventSource {
    return new EventSource(
      this.url(`/sessions/${sessionId}/events?after=${after}&wait=true&timeout=3600`),
    );
  }
}

export function parseEvent(kind: string, data: string): StudioEvent {
  const parsed = JSON.parse(data);
  return { seq: parsed.seq, kind: kind as EventKind, payload: parsed.payload };
}
