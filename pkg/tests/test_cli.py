import json

import pytest

from mathsynth.cli import main
from mathsynth.corpus import (
    load_checkpoint,
    load_corpus,
    load_solutions,
    save_checkpoint,
)
from mathsynth.grammar import Library, fit_grammar
from mathsynth.programs import parse_program

CHAIN = "(lambda (simplify (rrotate (sub $0 3) 1) 0))"


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """gen -> train end to end on a tiny single-shape corpus, search seeded
    from a pre-fitted checkpoint so the whole thing stays fast."""
    root = tmp_path_factory.mktemp("cli")
    corpus_dir = root / "corpus"
    run_dir = root / "run"
    seed_lib = root / "seed.json"

    rc = main(
        [
            "gen",
            "--seed", "4",
            "--templates", "3",
            "--shapes", "x_plus_b",
            "--train-fraction", "1.0",
            "--out", str(corpus_dir),
        ]
    )
    assert rc == 0

    lib = fit_grammar(Library.initial(), [parse_program(CHAIN)] * 6)
    save_checkpoint(str(seed_lib), lib)

    rc = main(
        [
            "train",
            "--train", str(corpus_dir / "train.jsonl"),
            "--library", str(seed_lib),
            "--seed", "5",
            "--iterations", "2",
            "--budget-expansions", "60000",
            "--timeout-secs", "120",
            "--patience", "5000",
            "--k-programs", "3",
            "--probes", "1",
            "--out", str(run_dir),
        ]
    )
    assert rc == 0
    return corpus_dir, run_dir, seed_lib


def test_gen_writes_loadable_split(pipeline):
    corpus_dir, _, _ = pipeline
    train = load_corpus(str(corpus_dir / "train.jsonl"))
    test = load_corpus(str(corpus_dir / "test.jsonl"))
    assert len(train) == 3 and len(test) == 0
    assert all(t.template_id.startswith("x_plus_b-") for t in train)


def test_gen_is_deterministic(tmp_path):
    for name in ("a", "b"):
        rc = main(
            ["gen", "--seed", "7", "--templates", "4", "--out", str(tmp_path / name)]
        )
        assert rc == 0
    assert (tmp_path / "a" / "train.jsonl").read_bytes() == (
        tmp_path / "b" / "train.jsonl"
    ).read_bytes()


def test_gen_rejects_unknown_shape(tmp_path, capsys):
    rc = main(["gen", "--shapes", "nope", "--out", str(tmp_path / "x")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_train_writes_run_artifacts(pipeline):
    _, run_dir, _ = pipeline
    names = sorted(p.name for p in run_dir.iterdir())
    assert names == [
        "checkpoint-00.json",
        "checkpoint-01.json",
        "checkpoint-02.json",
        "curve.json",
        "library.json",
        "solutions.json",
    ]
    curve = json.loads((run_dir / "curve.json").read_text())
    assert curve[-1]["train_solved"] == 3
    lib = load_checkpoint(str(run_dir / "library.json"))
    assert lib.abstractions()
    solutions = load_solutions(str(run_dir / "solutions.json"))
    assert len(solutions) == 3


def test_train_zero_iterations_copies_initial_library(pipeline, tmp_path):
    corpus_dir, _, seed_lib = pipeline
    out = tmp_path / "run0"
    rc = main(
        [
            "train",
            "--train", str(corpus_dir / "train.jsonl"),
            "--library", str(seed_lib),
            "--iterations", "0",
            "--out", str(out),
        ]
    )
    assert rc == 0
    assert (out / "checkpoint-00.json").read_bytes() == (
        out / "library.json"
    ).read_bytes()
    assert load_checkpoint(str(out / "library.json")).to_dict() == load_checkpoint(
        str(seed_lib)
    ).to_dict()


def test_solve_with_trained_library(pipeline, tmp_path, capsys):
    corpus_dir, run_dir, _ = pipeline
    out = tmp_path / "solved.json"
    rc = main(
        [
            "solve",
            "--tasks", str(corpus_dir / "train.jsonl"),
            "--library", str(run_dir / "library.json"),
            "--budget-expansions", "30000",
            "--out", str(out),
        ]
    )
    assert rc == 0
    assert "solved 3/3" in capsys.readouterr().out
    assert len(load_solutions(str(out))) == 3


def test_score_reports_raw_and_dedup_costs(pipeline, tmp_path, capsys):
    _, run_dir, _ = pipeline
    out = tmp_path / "scores.json"
    rc = main(
        ["score", "--solutions", str(run_dir / "solutions.json"), "--out", str(out)]
    )
    assert rc == 0
    head = capsys.readouterr().out.splitlines()[0]
    assert head.split() == ["task", "steps", "f", "raw", "f", "dedup"]
    scores = json.loads(out.read_text())
    assert all({"steps", "f_raw", "f_dedup"} <= set(v) for v in scores.values())


def test_compare_solutions_to_themselves_scores_zero(pipeline, tmp_path):
    _, run_dir, _ = pipeline
    out = tmp_path / "cmp.json"
    sols = str(run_dir / "solutions.json")
    rc = main(["compare", "--target", sols, "--baseline", sols, "--out", str(out)])
    assert rc == 0
    report = json.loads(out.read_text())
    assert report["raw"]["mean_c_score"] == "0"
    assert report["dedup"]["mean_c_score"] == "0"


def test_compare_hand_built_pair(tmp_path):
    (tmp_path / "target.json").write_text(
        json.dumps({"a/0": ["2x = 6", "x = 3"]})
    )
    (tmp_path / "baseline.json").write_text(
        json.dumps(
            {
                "a/0": [
                    "2x = 6",
                    "(2x) / 2 = 6 / 2",
                    "x * (2 / 2) = 3",
                    "x * 1 = 3",
                    "x = 3",
                ]
            }
        )
    )
    out = tmp_path / "cmp.json"
    rc = main(
        [
            "compare",
            "--target", str(tmp_path / "target.json"),
            "--baseline", str(tmp_path / "baseline.json"),
            "--out", str(out),
        ]
    )
    assert rc == 0
    report = json.loads(out.read_text())
    assert report["raw"]["c_scores"]["a/0"] == "3/4"
    assert report["raw"]["n_intersection"] == 1


def test_library_listing(pipeline, tmp_path, capsys):
    _, run_dir, _ = pipeline
    out = tmp_path / "lib.json"
    rc = main(
        ["library", "--checkpoint", str(run_dir / "library.json"), "--out", str(out)]
    )
    assert rc == 0
    text = capsys.readouterr().out
    assert "fn_0" in text and "expansions:" in text
    listing = json.loads(out.read_text())
    assert all({"arity", "body", "expansion", "origin_iteration"} <= set(v) for v in listing.values())
    assert any("(lambda" in v["expansion"] for v in listing.values())


def test_library_listing_of_primitive_only_checkpoint(tmp_path, capsys):
    path = tmp_path / "initial.json"
    save_checkpoint(str(path), Library.initial())
    rc = main(["library", "--checkpoint", str(path)])
    assert rc == 0
    assert "no abstractions" in capsys.readouterr().out


def test_missing_input_file_exits_nonzero(tmp_path, capsys):
    rc = main(["solve", "--tasks", str(tmp_path / "absent.jsonl")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err
