"""Record service payloads for the offline UI tests.

Drives one complete adaptive session against the live application object:
at every step the recorded student answers whatever question the service
asks next, answers coming from a sampled ground-truth answer sheet. The
reference block is computed by replaying the same script directly through
the session engine, so the UI tests can hold the browser flow against an
independent path.
"""

import json
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from monocat import NATIONAL_EXAM_SCALE, run_scripted
from monocat.dataio import ModelBundle
from monocat.networks import example_model, sample_answers, sample_skills
from monocat.service import create_app

FIXTURES = Path(__file__).resolve().parent.parent / "test" / "fixtures"
MODEL_SEED = 3
STUDENT_SEED = 2026


def final_block(report: dict) -> dict:
    return {
        "expected_score": report["score"]["expected"],
        "most_probable": report["score"]["most_probable"],
        "credible_lo": report["credible"]["lo"],
        "credible_hi": report["credible"]["hi"],
        "grade_label": report["grade"]["label"],
        "achieved_points": report["achieved_points"],
    }


def main() -> None:
    model = example_model(seed=MODEL_SEED)
    rng = np.random.default_rng(STUDENT_SEED)
    skills = sample_skills(model, 1, rng)
    sheet = sample_answers(model, skills, rng)[0]

    app = create_app(initial=ModelBundle(model=model, scale=NATIONAL_EXAM_SCALE))
    client = TestClient(app)

    summary = client.get("/models/default").json()
    start = client.post("/models/default/sessions?variant=B").json()
    session_id = start["session_id"]

    steps = []
    payload = start
    while not payload["complete"]:
        question = payload["next_question"]
        state = int(sheet[question])
        response = client.post(
            f"/sessions/{session_id}/answers?variant=B",
            json={"question": question, "state": state},
        )
        response.raise_for_status()
        payload = response.json()
        steps.append(
            {"request": {"question": question, "state": state}, "payload": payload}
        )
    final_a = client.get(f"/sessions/{session_id}?variant=A").json()

    script = [(s["request"]["question"], s["request"]["state"]) for s in steps]
    replay_b = run_scripted(model, script, scale=NATIONAL_EXAM_SCALE, variant="B")
    replay_a = run_scripted(model, script, scale=NATIONAL_EXAM_SCALE, variant="A")
    reference = {
        "script": [list(pair) for pair in script],
        "variant_b": {
            "expected_score": replay_b.final.expected_score,
            "credible_lo": replay_b.final.credible.lo,
            "credible_hi": replay_b.final.credible.hi,
            "grade_label": replay_b.final.grade_label,
            "achieved_points": replay_b.final.achieved_points,
        },
        "variant_a": {
            "expected_score": replay_a.final.expected_score,
            "credible_lo": replay_a.final.credible.lo,
            "credible_hi": replay_a.final.credible.hi,
            "grade_label": replay_a.final.grade_label,
            "achieved_points": replay_a.final.achieved_points,
        },
    }

    # sanity: the service path and the direct replay must already agree
    assert final_block(payload["report"]) | reference["variant_b"] == final_block(
        payload["report"]
    )
    assert abs(payload["report"]["score"]["expected"] - reference["variant_b"]["expected_score"]) < 1e-9
    assert abs(final_a["report"]["score"]["expected"] - reference["variant_a"]["expected_score"]) < 1e-9
    assert final_a["report"]["grade"]["label"] == reference["variant_a"]["grade_label"]

    FIXTURES.mkdir(parents=True, exist_ok=True)
    (FIXTURES / "model.json").write_text(json.dumps(summary, indent=1))
    (FIXTURES / "scripted_session.json").write_text(
        json.dumps({"start": start, "steps": steps, "final_a": final_a}, indent=1)
    )
    (FIXTURES / "reference.json").write_text(json.dumps(reference, indent=1))
    print(f"recorded {len(steps)} steps for session {session_id}")


if __name__ == "__main__":
    main()
