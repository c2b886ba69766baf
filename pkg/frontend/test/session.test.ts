/** Drives the app through a full recorded 37-answer session against a fetch
 * stub that replays service fixtures, then holds the review screen against
 * independently replayed final statistics. */

import { beforeEach, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { SessionApp } from '../src/app.js';
import {
  FetchCall,
  jsonResponse,
  modelFixture,
  recordingFetch,
  referenceFixture,
  sessionFixture,
} from './helpers.js';

const BASE = 'http://test';

/** Fetch stub that replays the recorded session in order and insists the
 * app sends exactly the requests the recording saw. */
function scriptedService() {
  const model = modelFixture();
  const recorded = sessionFixture();
  const sid = recorded.start.session_id;
  let next = 0;
  const { calls, fetchFn } = recordingFetch((call: FetchCall) => {
    if (call.method === 'GET' && call.url === `${BASE}/models/default`) {
      return jsonResponse(model);
    }
    if (call.method === 'POST' && call.url === `${BASE}/models/default/sessions?variant=B`) {
      return jsonResponse(recorded.start);
    }
    if (call.method === 'POST' && call.url === `${BASE}/sessions/${sid}/answers?variant=B`) {
      const step = recorded.steps[next++];
      expect(call.body).toEqual(step.request);
      return jsonResponse(step.payload);
    }
    if (call.method === 'GET' && call.url === `${BASE}/sessions/${sid}?variant=A`) {
      return jsonResponse(recorded.final_a);
    }
    throw new Error(`unexpected request: ${call.method} ${call.url}`);
  });
  return { model, recorded, calls, fetchFn };
}

function freshRoot(): HTMLElement {
  document.body.innerHTML = '<div id="app"></div>';
  return document.getElementById('app')!;
}

function statValue(root: HTMLElement, name: string): number {
  const el = root.querySelector(`[data-stat="${name}"]`);
  expect(el, `missing [data-stat=${name}]`).not.toBeNull();
  return Number(el!.getAttribute('data-value'));
}

let root: HTMLElement;

beforeEach(() => {
  root = freshRoot();
});

describe('scripted session', () => {
  it('walks all 37 recorded answers and lands on the replayed final report', async () => {
    const { recorded, calls, fetchFn } = scriptedService();
    const reference = referenceFixture();
    const app = new SessionApp(root, new ApiClient(BASE, fetchFn));

    await app.start();
    expect(app.view).toBe('test');
    expect(app.payload!.steps.length).toBe(0);

    for (const step of recorded.steps) {
      // the service, not the UI, decides which question comes next
      expect(app.payload!.next_question).toBe(step.request.question);
      await app.submit(step.request.state);
      expect(app.error).toBeNull();
    }

    expect(app.view).toBe('review');
    expect(app.payload!.complete).toBe(true);
    expect(app.payload!.steps).toEqual(reference.script);
    expect(calls.length).toBe(2 + recorded.steps.length + 1);

    // the closing adaptive-view payload agrees with the offline replay
    const last = app.payload!.report;
    expect(last.score.expected).toBeCloseTo(reference.variant_b.expected_score, 9);
    expect(last.credible.lo).toBe(reference.variant_b.credible_lo);
    expect(last.credible.hi).toBe(reference.variant_b.credible_hi);
    expect(last.grade!.label).toBe(reference.variant_b.grade_label);
    expect(last.achieved_points).toBe(reference.variant_b.achieved_points);

    // and the review screen shows the answered-questions-are-certain numbers
    expect(root.querySelector('[data-stat="final-grade"]')!.textContent).toBe(
      reference.variant_a.grade_label
    );
    expect(statValue(root, 'final-points')).toBe(reference.variant_a.achieved_points);
    expect(statValue(root, 'expected-score')).toBeCloseTo(
      reference.variant_a.expected_score,
      9
    );
    expect(statValue(root, 'credible-lo')).toBe(reference.variant_a.credible_lo);
    expect(statValue(root, 'credible-hi')).toBe(reference.variant_a.credible_hi);
    expect(root.querySelectorAll('tbody tr').length).toBe(recorded.steps.length);
  });

  it('renders only confirmed server state after each answer', async () => {
    const { recorded, fetchFn } = scriptedService();
    const app = new SessionApp(root, new ApiClient(BASE, fetchFn));
    await app.start();

    for (const step of recorded.steps.slice(0, 5)) {
      await app.submit(step.request.state);
      const report = step.payload.report;
      expect(statValue(root, 'expected-score')).toBe(report.score.expected);
      expect(statValue(root, 'num-answered')).toBe(report.num_answered);
      expect(root.querySelectorAll('[data-history-step]').length).toBe(
        step.payload.steps.length
      );
    }
  });
});

describe('request discipline', () => {
  it('keeps the answer buttons disabled while a request is in flight', async () => {
    const model = modelFixture();
    const recorded = sessionFixture();
    let release!: () => void;
    const gate = new Promise<void>((resolve) => {
      release = resolve;
    });
    const { calls, fetchFn } = recordingFetch(async (call: FetchCall) => {
      if (call.url.includes('/answers')) {
        await gate;
        return jsonResponse(recorded.steps[0].payload);
      }
      if (call.method === 'GET') return jsonResponse(model);
      return jsonResponse(recorded.start);
    });
    const app = new SessionApp(root, new ApiClient(BASE, fetchFn));
    await app.start();

    const inFlight = app.submit(recorded.steps[0].request.state);
    expect(app.busy).toBe(true);
    const buttons = root.querySelectorAll('button.answer');
    expect(buttons.length).toBeGreaterThan(0);
    buttons.forEach((b) => expect((b as HTMLButtonElement).disabled).toBe(true));

    // a second submit during the flight must not reach the network
    await app.submit(0);
    expect(calls.filter((c) => c.url.includes('/answers')).length).toBe(1);

    release();
    await inFlight;
    expect(app.busy).toBe(false);
    expect(app.payload!.steps.length).toBe(1);
    root
      .querySelectorAll('button.answer')
      .forEach((b) => expect((b as HTMLButtonElement).disabled).toBe(false));
  });

  it('surfaces a rejected answer and keeps the session alive', async () => {
    const model = modelFixture();
    const recorded = sessionFixture();
    const { fetchFn } = recordingFetch((call: FetchCall) => {
      if (call.url.includes('/answers')) {
        return jsonResponse({ detail: 'state 7 out of range for question 14' }, 409);
      }
      if (call.method === 'GET') return jsonResponse(model);
      return jsonResponse(recorded.start);
    });
    const app = new SessionApp(root, new ApiClient(BASE, fetchFn));
    await app.start();

    await app.submit(7);
    expect(app.view).toBe('test');
    expect(app.busy).toBe(false);
    expect(app.error).toBe('state 7 out of range for question 14');
    expect(root.querySelector('.error')!.textContent).toContain('out of range');
    expect(app.payload!.steps.length).toBe(0);
  });
});

describe('click wiring', () => {
  it('starts a session and submits answers from real button clicks', async () => {
    const { recorded, calls, fetchFn } = scriptedService();
    const app = new SessionApp(root, new ApiClient(BASE, fetchFn));

    (root.querySelector('button.start') as HTMLButtonElement).click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(app.view).toBe('test');

    const state = recorded.steps[0].request.state;
    (root.querySelector(`button.answer[data-state="${state}"]`) as HTMLButtonElement).click();
    await new Promise((resolve) => setTimeout(resolve, 0));

    const answered = calls.filter((c) => c.url.includes('/answers'));
    expect(answered.length).toBe(1);
    expect(answered[0].body).toEqual(recorded.steps[0].request);
    expect(app.payload!.steps.length).toBe(1);
  });
});
