/** Typed fetch client for the monocat HTTP service.
 *
 * The shapes below mirror the service payloads field for field; the UI never
 * derives a statistic itself, it only displays what arrives here.
 */

export interface SkillInfo {
  id: number;
  num_states: number;
  name: string | null;
}

export interface QuestionInfo {
  id: number;
  num_states: number;
  points: number[];
  label: string | null;
}

export interface GradeScaleInfo {
  bounds: [number, number][];
  labels: string[];
}

export interface ModelSummary {
  model_id: string;
  num_skills: number;
  num_questions: number;
  max_score: number;
  skills: SkillInfo[];
  questions: QuestionInfo[];
  grade_scale: GradeScaleInfo | null;
}

export interface ScoreBlock {
  probs: number[];
  expected: number;
  most_probable: number;
}

export interface CredibleBlock {
  scores: number[];
  coverage: number;
  lo: number;
  hi: number;
}

export interface GradeBlock {
  index: number;
  label: string;
  error: number;
  masses: number[];
}

export interface Report {
  num_answered: number;
  answered: Record<string, number>;
  achieved_points: number;
  skill_marginals: number[][];
  score: ScoreBlock;
  credible: CredibleBlock;
  grade: GradeBlock | null;
}

export interface SessionPayload {
  session_id: string;
  model_id: string;
  steps: [number, number][];
  report: Report;
  next_question: number | null;
  complete: boolean;
}

export type Variant = 'A' | 'B';

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = 'ApiError';
  }
}

export class ApiClient {
  private readonly base: string;

  constructor(baseUrl: string, private readonly fetchFn: typeof fetch = fetch) {
    this.base = baseUrl.replace(/\/+$/, '');
  }

  model(modelId: string): Promise<ModelSummary> {
    return this.request<ModelSummary>('GET', `/models/${modelId}`);
  }

  createSession(modelId: string, variant: Variant = 'B'): Promise<SessionPayload> {
    return this.request<SessionPayload>(
      'POST',
      `/models/${modelId}/sessions?variant=${variant}`
    );
  }

  session(sessionId: string, variant: Variant = 'B'): Promise<SessionPayload> {
    return this.request<SessionPayload>('GET', `/sessions/${sessionId}?variant=${variant}`);
  }

  submitAnswer(
    sessionId: string,
    question: number,
    state: number,
    variant: Variant = 'B'
  ): Promise<SessionPayload> {
    return this.request<SessionPayload>(
      'POST',
      `/sessions/${sessionId}/answers?variant=${variant}`,
      { question, state }
    );
  }

  private async request<T>(method: string, path: string, body?: object): Promise<T> {
    const init: RequestInit = {
      method,
      headers: { Accept: 'application/json' },
    };
    if (body !== undefined) {
      init.headers = { ...init.headers, 'Content-Type': 'application/json' };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(`${this.base}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText || `request failed (${response.status})`;
      try {
        const doc = await response.json();
        if (doc && typeof doc.detail === 'string') detail = doc.detail;
      } catch {
        // non-JSON error body, keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }
}
