"""Command-line interface.

Exit codes: 0 on success, 1 on a domain error (bad model file, infeasible
request, invalid answers), 2 on a usage error. All randomness flows from the
--seed options, so repeating a command reproduces its output byte for byte.
"""

from __future__ import annotations

import functools
import json
import sys

import click
import numpy as np

from monocat.dataio import load_bundle, load_dataset, save_dataset, save_model
from monocat.errors import MonocatError
from monocat.evaluation import mean_first_step, run_cohort, timing_benchmark
from monocat.inference import log_likelihood
from monocat.isotonic import project_model
from monocat.learning import LearnConfig, learn
from monocat.networks import sample_dataset
from monocat.score import NAIVE_QUESTION_CAP, score_distribution
from monocat.session import (
    record_answer,
    report_to_dict,
    select_next,
    session_report,
    start_session,
)


def domain_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except MonocatError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


@click.group()
@click.option(
    "--config",
    default=None,
    type=click.Path(exists=True, dir_okay=False),
    help="JSON file of option defaults, keyed by subcommand; explicit flags win",
)
@click.pass_context
def cli(ctx, config):
    """Monotone student models for adaptive testing."""
    if config is not None:
        with open(config) as fh:
            try:
                defaults = json.load(fh)
            except json.JSONDecodeError as exc:
                raise click.BadParameter(f"config is not valid JSON: {exc}", param_hint="--config")
        if not isinstance(defaults, dict):
            raise click.BadParameter("config must be a JSON object", param_hint="--config")
        ctx.default_map = defaults


@cli.command()
@click.argument("model_file", type=click.Path(exists=True, dir_okay=False))
@domain_errors
def validate(model_file):
    """Check a model file and print a one-line summary."""
    bundle = load_bundle(model_file)
    model = bundle.model
    scale = "with grade scale" if bundle.scale else "no grade scale"
    click.echo(
        f"ok: {model.num_skills} skills, {model.num_questions} questions, "
        f"max score {model.max_score}, joint space {model.joint_size}, {scale}"
    )


@cli.command()
@click.argument("model_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--tolerance", default=1e-9, show_default=True)
@domain_errors
def check(model_file, tolerance):
    """Report order violations per question; exit 1 if any."""
    model = load_bundle(model_file).model
    reports = model.monotonicity_certificate(tolerance)
    bad = 0
    for rep in reports:
        if rep.ok:
            click.echo(f"q{rep.question}: ok")
        else:
            bad += 1
            click.echo(
                f"q{rep.question}: {len(rep.violations)} violations, "
                f"worst {rep.max_magnitude():.3e}"
            )
    if bad:
        click.echo(f"{bad} of {len(reports)} questions violate the order", err=True)
        sys.exit(1)


@cli.command()
@click.argument("model_file", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
@domain_errors
def project(model_file, out):
    """Project every question table onto the monotone cone."""
    bundle = load_bundle(model_file)
    projected = project_model(bundle.model)
    save_model(projected, out, scale=bundle.scale)
    worst = max(r.max_magnitude() for r in projected.monotonicity_certificate())
    click.echo(f"wrote {out} (residual violation {worst:.2e})")


@cli.command()
@click.argument("model_file", type=click.Path(exists=True, dir_okay=False))
@click.option("-n", "--students", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
@domain_errors
def sample(model_file, students, seed, out):
    """Draw a complete answer matrix from the model."""
    model = load_bundle(model_file).model
    data = sample_dataset(model, students, seed=seed)
    save_dataset(data, out)
    click.echo(f"wrote {out}: {data.shape[0]} students x {data.shape[1]} questions")


@cli.command("learn")
@click.argument("data_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("model_file", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--method",
    default="em",
    show_default=True,
    type=click.Choice(["em", "grad", "irem", "qirem", "rgrad"]),
)
@click.option("--restarts", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--max-iter", default=300, show_default=True)
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
@domain_errors
def learn_cmd(data_file, model_file, method, restarts, seed, max_iter, out):
    """Fit parameters on a complete dataset and write the fitted model."""
    bundle = load_bundle(model_file)
    data = load_dataset(data_file, bundle.model)
    cfg = LearnConfig(method=method, restarts=restarts, seed=seed, max_iter=max_iter)
    result = learn(data, bundle.model, cfg)
    save_model(result.model, out, scale=bundle.scale)
    click.echo(
        f"{method}: log-likelihood {result.log_likelihood:.6f} "
        f"(restart {result.restart_index}, converged {result.converged}, "
        f"max violation {result.max_violation:.2e})"
    )
    click.echo(f"wrote {out}")


@cli.command()
@click.argument("model_file", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--answer",
    "answers",
    multiple=True,
    metavar="QID=STATE",
    help="repeatable; e.g. --answer 3=1",
)
@click.option("--variant", default="B", show_default=True, type=click.Choice(["A", "B"]))
@click.option("--mass", default=0.95, show_default=True)
@domain_errors
def score(model_file, answers, variant, mass):
    """Print the belief report for a set of answers as JSON."""
    bundle = load_bundle(model_file)
    state = start_session(bundle.model)
    for item in answers:
        try:
            qid_text, state_text = item.split("=", 1)
            qid, answer_state = int(qid_text), int(state_text)
        except ValueError:
            raise click.BadParameter(f"--answer needs QID=STATE, got {item!r}") from None
        state = record_answer(state, qid, answer_state)
    report = session_report(state, scale=bundle.scale, mass=mass, variant=variant)
    doc = report_to_dict(report)
    doc["next_question"] = select_next(state)
    doc["complete"] = state.complete
    click.echo(json.dumps(doc, indent=2))


@cli.command()
@click.argument("model_file", type=click.Path(exists=True, dir_okay=False))
@click.option("-n", "--students", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option(
    "--policy",
    default="both",
    show_default=True,
    type=click.Choice(["adaptive", "fixed", "both"]),
)
@click.option("--threshold", default=0.5, show_default=True)
@click.option("--max-steps", default=None, type=int)
@domain_errors
def simulate(model_file, students, seed, policy, threshold, max_steps):
    """Simulate a cohort and report how fast grade uncertainty falls."""
    bundle = load_bundle(model_file)
    if bundle.scale is None:
        raise MonocatError(
            "simulate needs a grade_scale in the model file to track grade error"
        )
    policies = ["adaptive", "fixed"] if policy == "both" else [policy]
    for pol in policies:
        traces = run_cohort(
            bundle.model, bundle.model, students, seed=seed,
            policy=pol, scale=bundle.scale, max_steps=max_steps,
        )
        step = mean_first_step(traces, threshold)
        final_expected = float(np.mean([t.final.expected_score for t in traces]))
        click.echo(
            f"{pol}: mean first step with grade error < {threshold}: {step:.3f}, "
            f"mean final expected score {final_expected:.3f}"
        )


@cli.command()
@click.option("--questions", default="8,12,14,16,18,20,37", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--repeat", default=3, show_default=True)
@click.option("--max-naive", default=None, type=int, help="question cap for the naive path")
@click.option("-o", "--out", default=None, type=click.Path(dir_okay=False), help="also write CSV")
@domain_errors
def bench(questions, seed, repeat, max_naive, out):
    """Time the convolution path against brute-force score enumeration."""
    try:
        sizes = [int(s) for s in questions.split(",") if s.strip()]
    except ValueError:
        raise click.BadParameter(f"--questions needs comma-separated ints, got {questions!r}")
    cap = NAIVE_QUESTION_CAP if max_naive is None else max_naive
    rows = timing_benchmark(sizes, seed=seed, repeats=repeat, naive_cap=cap)
    click.echo(f"{'n':>4} {'tree (s)':>12} {'naive (s)':>12}")
    for row in rows:
        naive = "infeasible" if row.naive_seconds is None else f"{row.naive_seconds:.6f}"
        click.echo(f"{row.num_questions:>4} {row.divorcing_seconds:>12.6f} {naive:>12}")
    if out is not None:
        with open(out, "w") as fh:
            fh.write("questions,divorcing_seconds,naive_seconds\n")
            for row in rows:
                naive = "infeasible" if row.naive_seconds is None else f"{row.naive_seconds:.9f}"
                fh.write(f"{row.num_questions},{row.divorcing_seconds:.9f},{naive}\n")
        click.echo(f"wrote {out}")


@cli.command()
@click.argument("model_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--state-dir", default=None, type=click.Path(file_okay=False))
@domain_errors
def serve(model_file, host, port, state_dir):
    """Serve the model over HTTP."""
    import uvicorn

    from monocat.service import create_app

    bundle = load_bundle(model_file)
    app = create_app(initial=bundle, state_dir=state_dir)
    uvicorn.run(app, host=host, port=port)


@cli.command("loglik")
@click.argument("data_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("model_file", type=click.Path(exists=True, dir_okay=False))
@domain_errors
def loglik(data_file, model_file):
    """Log-likelihood of a dataset under a model (missing answers allowed)."""
    model = load_bundle(model_file).model
    data = load_dataset(data_file, model)
    click.echo(f"log-likelihood: {log_likelihood(model, data):.6f}")


main = cli

if __name__ == "__main__":
    main()
