"""File formats: models as JSON, answer datasets as CSV.

Model files carry the structure, the parameters and optionally a grade
scale. Dataset files are plain CSV with one column per question (header
``q0,q1,...``) and one row per student; an empty cell is an unanswered
question.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from monocat.errors import DatasetError, ModelError
from monocat.model import StudentModel, build_model
from monocat.score import GradeScale

MODEL_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["skills", "questions"],
    "additionalProperties": False,
    "properties": {
        "skills": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "num_states"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "num_states": {"type": "integer", "minimum": 2},
                    "name": {"type": "string"},
                },
            },
        },
        "questions": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "num_states", "parents"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "num_states": {"type": "integer", "minimum": 2},
                    "points": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    "parents": {
                        "type": "array",
                        "minItems": 1,
                        "items": {"type": "integer", "minimum": 0},
                    },
                    "isotone": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    "antitone": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    "label": {"type": "string"},
                },
            },
        },
        "priors": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number"}},
        },
        "cpts": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "array", "items": {"type": "number"}},
            },
        },
        "grade_scale": {
            "type": "object",
            "required": ["bounds", "labels"],
            "additionalProperties": False,
            "properties": {
                "bounds": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "array",
                        "minItems": 2,
                        "maxItems": 2,
                        "items": {"type": "integer", "minimum": 0},
                    },
                },
                "labels": {"type": "array", "items": {"type": "string"}},
            },
        },
    },
}


@dataclass(frozen=True)
class ModelBundle:
    model: StudentModel
    scale: GradeScale | None


def model_to_dict(model: StudentModel, scale: GradeScale | None = None) -> dict:
    out = {
        "skills": [
            {"id": s.id, "num_states": s.num_states, "name": s.name} for s in model.skills
        ],
        "questions": [
            {
                "id": q.id,
                "num_states": q.num_states,
                "points": list(q.points),
                "parents": list(model.parents[q.id]),
                "isotone": list(model.annotations[q.id].isotone),
                "antitone": list(model.annotations[q.id].antitone),
                "label": q.label,
            }
            for q in model.questions
        ],
        "priors": [prior.tolist() for prior in model.skill_priors],
        "cpts": [cpt.table.tolist() for cpt in model.cpts],
    }
    if scale is not None:
        out["grade_scale"] = {
            "bounds": [list(b) for b in scale.bounds],
            "labels": list(scale.labels),
        }
    return out


def bundle_from_dict(raw: dict) -> ModelBundle:
    """Validate a parsed model document and build the model it describes."""
    validator = jsonschema.Draft202012Validator(MODEL_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: (len(e.absolute_path), str(e.absolute_path)))
    if errors:
        first = errors[0]
        raise ModelError(f"model document invalid at {first.json_path}: {first.message}")
    scale = None
    if "grade_scale" in raw:
        gs = raw["grade_scale"]
        scale = GradeScale(
            bounds=tuple((int(lo), int(hi)) for lo, hi in gs["bounds"]),
            labels=tuple(gs["labels"]),
        )
    description = {k: v for k, v in raw.items() if k != "grade_scale"}
    return ModelBundle(model=build_model(description), scale=scale)


def save_model(model: StudentModel, path, scale: GradeScale | None = None) -> None:
    doc = model_to_dict(model, scale)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_bundle(path) -> ModelBundle:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ModelError(f"{path}: model document must be a JSON object")
    return bundle_from_dict(raw)


def load_model(path) -> StudentModel:
    return load_bundle(path).model


def save_dataset(data: np.ndarray, path) -> None:
    data = np.asarray(data, dtype=np.int64)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"q{i}" for i in range(data.shape[1])])
        for row in data:
            writer.writerow(["" if v < 0 else int(v) for v in row])


def load_dataset(path, model: StudentModel | None = None) -> np.ndarray:
    """Read an answer matrix; -1 marks empty cells. Errors name the file line."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        expected = [f"q{i}" for i in range(len(header))]
        if [h.strip() for h in header] != expected:
            raise DatasetError(
                f"{path} line 1: header must be {','.join(expected[:3])},... "
                f"(one q<id> column per question)"
            )
        if model is not None and len(header) != model.num_questions:
            raise DatasetError(
                f"{path} line 1: {len(header)} columns for a model with "
                f"{model.num_questions} questions"
            )
        rows = []
        for lineno, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(header):
                raise DatasetError(
                    f"{path} line {lineno}: {len(cells)} cells, expected {len(header)}"
                )
            row = []
            for qid, cell in enumerate(cells):
                cell = cell.strip()
                if cell == "":
                    row.append(-1)
                    continue
                try:
                    state = int(cell)
                except ValueError:
                    raise DatasetError(
                        f"{path} line {lineno}: column q{qid} has non-integer value {cell!r}"
                    ) from None
                if state < 0:
                    raise DatasetError(
                        f"{path} line {lineno}: column q{qid} has negative state {state}"
                    )
                if model is not None and state >= model.questions[qid].num_states:
                    raise DatasetError(
                        f"{path} line {lineno}: column q{qid} has state {state}, "
                        f"question has {model.questions[qid].num_states} states"
                    )
                row.append(state)
            rows.append(row)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.int64)
