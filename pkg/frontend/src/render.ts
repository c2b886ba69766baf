/** HTML builders for everything the session screens show.
 *
 * Each displayed statistic is wrapped in an element carrying `data-stat`
 * (what it is) and `data-value` (the payload number, verbatim), so tests can
 * hold the DOM against the service payload without parsing formatted text.
 */

import type {
  CredibleBlock,
  GradeBlock,
  ModelSummary,
  QuestionInfo,
  Report,
  SessionPayload,
} from './api.js';

export function fmt2(x: number): string {
  return x.toFixed(2);
}

export function pct(x: number): string {
  return `${(100 * x).toFixed(1)}%`;
}

function stat(name: string, value: number, display: string): string {
  return `<span data-stat="${name}" data-value="${value}">${display}</span>`;
}

export function renderStats(report: Report, numQuestions: number): string {
  const cards = [
    ['Expected score', stat('expected-score', report.score.expected, fmt2(report.score.expected))],
    ['Most probable', stat('most-probable', report.score.most_probable, String(report.score.most_probable))],
    ['Points so far', stat('achieved-points', report.achieved_points, String(report.achieved_points))],
    ['Answered', `${stat('num-answered', report.num_answered, String(report.num_answered))}/${numQuestions}`],
  ];
  return cards
    .map(
      ([label, value]) => `
      <div class="stat-card">
        <div class="label">${label}</div>
        <div class="value">${value}</div>
      </div>`
    )
    .join('');
}

export function renderHistogram(probs: number[], credible: CredibleBlock): string {
  const peak = Math.max(...probs, 1e-12);
  const bars = probs
    .map((p, score) => {
      const height = Math.max(1, Math.round((100 * p) / peak));
      const inHull = score >= credible.lo && score <= credible.hi ? ' in-hull' : '';
      return `
      <div class="bar-slot" title="P(score = ${score}) = ${p}">
        <div class="bar${inHull}" data-stat="score-prob" data-score="${score}" data-value="${p}"
             style="height:${height}%"></div>
      </div>`;
    })
    .join('');
  return `<div class="histogram">${bars}</div>`;
}

export function renderCredible(credible: CredibleBlock): string {
  return `
    <div class="credible">
      95% interval:
      ${stat('credible-lo', credible.lo, String(credible.lo))}
      &ndash;
      ${stat('credible-hi', credible.hi, String(credible.hi))}
      points (covers ${stat('credible-coverage', credible.coverage, pct(credible.coverage))})
    </div>`;
}

export function renderGrade(grade: GradeBlock | null, labels: string[]): string {
  if (grade === null) return '<div class="grade-panel">No grade scale configured.</div>';
  const bins = grade.masses
    .map((mass, i) => {
      const active = i === grade.index ? ' active' : '';
      return `
      <div class="grade-bin${active}">
        <div class="grade-label">${labels[i] ?? String(i)}</div>
        <div class="grade-track">
          <div class="grade-fill" style="width:${Math.round(100 * mass)}%"></div>
        </div>
        <div class="grade-mass">${stat(`grade-mass-${i}`, mass, pct(mass))}</div>
      </div>`;
    })
    .join('');
  return `
    <div class="grade-panel">
      <div class="grade-headline">
        Predicted grade
        <strong data-stat="grade-label" data-index="${grade.index}">${grade.label}</strong>
      </div>
      ${bins}
    </div>`;
}

export function renderSkills(marginals: number[][], summary: ModelSummary): string {
  const rows = marginals
    .map((dist, skill) => {
      const name = summary.skills[skill]?.name ?? `S${skill}`;
      const cells = dist
        .map(
          (p, state) => `
        <div class="skill-cell" data-stat="skill-marginal" data-skill="${skill}"
             data-state="${state}" data-value="${p}">
          <div class="skill-fill" style="width:${Math.round(100 * p)}%"></div>
          <span>${pct(p)}</span>
        </div>`
        )
        .join('');
      return `<div class="skill-row"><div class="skill-name">${name}</div>${cells}</div>`;
    })
    .join('');
  return `<div class="skills">${rows}</div>`;
}

export function renderQuestion(
  question: QuestionInfo,
  busy: boolean,
  step: number
): string {
  const title = question.label ?? `Question ${question.id}`;
  const buttons = question.points
    .map(
      (pointsWorth, state) => `
      <button class="answer" data-state="${state}" ${busy ? 'disabled' : ''}>
        ${state} <small>(${pointsWorth} pt)</small>
      </button>`
    )
    .join('');
  return `
    <div class="question-card" data-question="${question.id}">
      <div class="step-counter">Step ${step}</div>
      <h2>${title}</h2>
      <div class="answers">${buttons}</div>
    </div>`;
}

export function renderHistory(
  steps: [number, number][],
  questions: QuestionInfo[]
): string {
  if (steps.length === 0) return '<div class="history empty">No answers yet.</div>';
  const rows = steps
    .map(([question, answer], i) => {
      const label = questions[question]?.label ?? `Question ${question}`;
      const pointsWorth = questions[question]?.points[answer] ?? 0;
      return `
      <tr data-history-step="${i + 1}">
        <td>${i + 1}</td><td>${label}</td>
        <td data-stat="history-answer" data-question="${question}" data-value="${answer}">${answer}</td>
        <td>${pointsWorth} pt</td>
      </tr>`;
    })
    .join('');
  return `
    <table class="history">
      <thead><tr><th>#</th><th>Question</th><th>Answer</th><th>Points</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>`;
}

export function renderReview(payload: SessionPayload, summary: ModelSummary): string {
  const report = payload.report;
  const labels = summary.grade_scale?.labels ?? [];
  const gradeLine = report.grade
    ? `Final grade <strong data-stat="final-grade" data-index="${report.grade.index}">${report.grade.label}</strong>`
    : 'No grade scale configured.';
  return `
    <section class="view-review">
      <h1>Test complete</h1>
      <div class="final-score">
        Obtained ${stat('final-points', report.achieved_points, String(report.achieved_points))}
        of ${summary.max_score} points
      </div>
      <div class="final-grade-line">${gradeLine}</div>
      <div class="stats">${renderStats(report, summary.num_questions)}</div>
      ${renderHistogram(report.score.probs, report.credible)}
      ${renderCredible(report.credible)}
      ${renderGrade(report.grade, labels)}
      ${renderHistory(payload.steps, summary.questions)}
    </section>`;
}
