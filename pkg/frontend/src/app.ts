/** The session screens and their state machine.
 *
 * Three views: "session" (pick a model, start), "test" (answer questions,
 * watch the belief evolve), "review" (final grade plus the certain score
 * distribution once everything is answered). Only confirmed server state is
 * ever rendered, and at most one request is in flight: submitting disables
 * the answer buttons until the response lands.
 */

import { ApiClient, ModelSummary, SessionPayload } from './api.js';
import {
  renderCredible,
  renderGrade,
  renderHistogram,
  renderHistory,
  renderQuestion,
  renderReview,
  renderSkills,
  renderStats,
} from './render.js';

export type View = 'session' | 'test' | 'review';

export class SessionApp {
  view: View = 'session';
  busy = false;
  error: string | null = null;
  summary: ModelSummary | null = null;
  payload: SessionPayload | null = null;
  finalPayload: SessionPayload | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
    private readonly modelId: string = 'default'
  ) {
    this.root.addEventListener('click', (event) => {
      const target = event.target instanceof Element ? event.target.closest('button') : null;
      if (!target) return;
      if (target.classList.contains('start')) void this.start();
      if (target.classList.contains('answer')) {
        void this.submit(Number(target.getAttribute('data-state')));
      }
      if (target.classList.contains('again')) this.reset();
    });
    this.render();
  }

  reset(): void {
    this.view = 'session';
    this.payload = this.finalPayload = null;
    this.error = null;
    this.render();
  }

  async start(): Promise<void> {
    if (this.busy) return;
    this.busy = true;
    this.error = null;
    this.render();
    try {
      this.summary = await this.client.model(this.modelId);
      this.payload = await this.client.createSession(this.modelId, 'B');
      this.view = 'test';
    } catch (err) {
      this.error = err instanceof Error ? err.message : String(err);
    } finally {
      this.busy = false;
      this.render();
    }
  }

  async submit(state: number): Promise<void> {
    const payload = this.payload;
    if (this.busy || !payload || payload.next_question === null) return;
    this.busy = true;
    this.error = null;
    this.render();
    try {
      const next = await this.client.submitAnswer(
        payload.session_id,
        payload.next_question,
        state,
        'B'
      );
      this.payload = next;
      if (next.complete) {
        // the review screen shows the answered-questions-are-certain view,
        // where the finished test collapses to the obtained score
        this.finalPayload = await this.client.session(next.session_id, 'A');
        this.view = 'review';
      }
    } catch (err) {
      this.error = err instanceof Error ? err.message : String(err);
    } finally {
      this.busy = false;
      this.render();
    }
  }

  render(): void {
    const banner = this.error ? `<div class="error">${this.error}</div>` : '';
    switch (this.view) {
      case 'session':
        this.root.innerHTML = `
          <section class="view-session">
            <h1>monocat adaptive test</h1>
            <p>The next question is always the one expected to tell the most
               about your skills; score and grade estimates update after every
               answer.</p>
            ${banner}
            <button class="start" ${this.busy ? 'disabled' : ''}>Start a session</button>
          </section>`;
        return;
      case 'test':
        this.root.innerHTML = this.renderTest(banner);
        return;
      case 'review': {
        const payload = this.finalPayload;
        const summary = this.summary;
        this.root.innerHTML =
          payload && summary
            ? `${banner}${renderReview(payload, summary)}
               <button class="again">Start another session</button>`
            : banner;
        return;
      }
    }
  }

  private renderTest(banner: string): string {
    const payload = this.payload;
    const summary = this.summary;
    if (!payload || !summary) return banner;
    const report = payload.report;
    const question =
      payload.next_question === null ? null : summary.questions[payload.next_question];
    const questionCard = question
      ? renderQuestion(question, this.busy, payload.steps.length + 1)
      : '<div class="question-card">Waiting for the final report&hellip;</div>';
    return `
      <section class="view-test">
        ${banner}
        ${questionCard}
        <div class="stats">${renderStats(report, summary.num_questions)}</div>
        ${renderHistogram(report.score.probs, report.credible)}
        ${renderCredible(report.credible)}
        ${renderGrade(report.grade, summary.grade_scale?.labels ?? [])}
        ${renderSkills(report.skill_marginals, summary)}
        ${renderHistory(payload.steps, summary.questions)}
      </section>`;
  }
}
