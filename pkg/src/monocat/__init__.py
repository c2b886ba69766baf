"""Monotone student models for adaptive testing.

Two-layer Bayesian networks whose latent skills order the answer
distributions, exact score inference by batched convolution, constrained
parameter fitting, and an entropy-driven question selector.
"""

from monocat.errors import (
    CapacityError,
    ContradictionError,
    DatasetError,
    DuplicateAnswerError,
    LearnError,
    ModelError,
    MonocatError,
    SessionError,
)
from monocat.model import (
    Cpt,
    MonotonicityAnnotation,
    MonotonicityReport,
    ParentConfigOrder,
    QuestionVar,
    SkillVar,
    StudentModel,
    Violation,
    build_model,
    covering_pairs,
    is_monotone,
    validate_model,
)
from monocat.inference import (
    answer_distribution,
    entropy,
    log_likelihood,
    posterior_joint,
    skill_marginals,
)
from monocat.score import (
    CredibleSet,
    GradeScale,
    NATIONAL_EXAM_SCALE,
    ScoreDistribution,
    bin_masses,
    expected_grade_error,
    grade,
    grade_error,
    score_distribution,
    score_distribution_naive,
)
from monocat.isotonic import isotonic_fit_decreasing, project_cpt, project_model
from monocat.learning import LearnConfig, LearnResult, em_step, learn
from monocat.session import (
    SessionReport,
    SessionState,
    record_answer,
    report_to_dict,
    select_next,
    session_report,
    start_session,
)
from monocat.networks import bench_model, example_model, sample_dataset
from monocat.evaluation import (
    MethodEval,
    SessionTrace,
    StepRecord,
    TimingRow,
    answer_accuracy,
    mean_curve,
    mean_first_step,
    pass_probability,
    run_cohort,
    run_experiment,
    run_scripted,
    score_error,
    simulate_session,
    timing_benchmark,
    true_total_score,
)
from monocat.dataio import (
    ModelBundle,
    bundle_from_dict,
    load_bundle,
    load_dataset,
    load_model,
    model_to_dict,
    save_dataset,
    save_model,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "ContradictionError",
    "Cpt",
    "CredibleSet",
    "DatasetError",
    "DuplicateAnswerError",
    "GradeScale",
    "LearnConfig",
    "LearnError",
    "LearnResult",
    "MethodEval",
    "ModelBundle",
    "ModelError",
    "MonocatError",
    "MonotonicityAnnotation",
    "MonotonicityReport",
    "NATIONAL_EXAM_SCALE",
    "ParentConfigOrder",
    "QuestionVar",
    "ScoreDistribution",
    "SessionError",
    "SessionReport",
    "SessionState",
    "SessionTrace",
    "SkillVar",
    "StepRecord",
    "StudentModel",
    "TimingRow",
    "Violation",
    "answer_accuracy",
    "answer_distribution",
    "bench_model",
    "bin_masses",
    "build_model",
    "bundle_from_dict",
    "covering_pairs",
    "em_step",
    "entropy",
    "example_model",
    "expected_grade_error",
    "grade",
    "grade_error",
    "is_monotone",
    "isotonic_fit_decreasing",
    "learn",
    "load_bundle",
    "load_dataset",
    "load_model",
    "log_likelihood",
    "mean_curve",
    "mean_first_step",
    "model_to_dict",
    "pass_probability",
    "posterior_joint",
    "project_cpt",
    "project_model",
    "record_answer",
    "report_to_dict",
    "run_cohort",
    "run_experiment",
    "run_scripted",
    "sample_dataset",
    "save_dataset",
    "save_model",
    "score_distribution",
    "score_distribution_naive",
    "score_error",
    "select_next",
    "session_report",
    "simulate_session",
    "skill_marginals",
    "start_session",
    "timing_benchmark",
    "true_total_score",
    "validate_model",
]
