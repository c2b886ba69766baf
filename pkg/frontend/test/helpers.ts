/** Shared fixture loading and a recording fetch stub. */

import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

import type { ModelSummary, SessionPayload } from '../src/api.js';

const here = dirname(fileURLToPath(import.meta.url));

export function loadFixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, 'fixtures', name), 'utf8')) as T;
}

export interface RecordedStep {
  request: { question: number; state: number };
  payload: SessionPayload;
}

export interface ScriptedSession {
  start: SessionPayload;
  steps: RecordedStep[];
  final_a: SessionPayload;
}

export interface FinalReference {
  expected_score: number;
  most_probable?: number;
  credible_lo: number;
  credible_hi: number;
  grade_label: string;
  achieved_points: number;
}

export interface Reference {
  script: [number, number][];
  variant_b: FinalReference;
  variant_a: FinalReference;
}

export const modelFixture = (): ModelSummary => loadFixture<ModelSummary>('model.json');
export const sessionFixture = (): ScriptedSession =>
  loadFixture<ScriptedSession>('scripted_session.json');
export const referenceFixture = (): Reference => loadFixture<Reference>('reference.json');

export interface FetchCall {
  url: string;
  method: string;
  body: unknown;
}

export function jsonResponse(doc: unknown, status = 200): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: status === 200 ? 'OK' : 'Error',
    json: async () => doc,
  } as unknown as Response;
}

/** Fetch stub that logs every call and answers from a handler. */
export function recordingFetch(
  handler: (call: FetchCall) => Response | Promise<Response>
): { calls: FetchCall[]; fetchFn: typeof fetch } {
  const calls: FetchCall[] = [];
  const fetchFn = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const call: FetchCall = {
      url: String(input),
      method: init?.method ?? 'GET',
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
    };
    calls.push(call);
    return handler(call);
  }) as typeof fetch;
  return { calls, fetchFn };
}
