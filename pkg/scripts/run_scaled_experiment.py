#!/usr/bin/env python3
"""Scaled end-to-end run: generate a 30-template corpus over all shapes,
train for 5 iterations at 1M expansions per task, and summarize accuracy,
learned abstractions, and conciseness.  Takes roughly 8 minutes with the
defaults; artifacts (checkpoints, curve, solutions) land in --out.

Needs the package importable, e.g. after `pip install -e .`.
"""

import argparse
import os
import time

from mathsynth.corpus import generate_corpus, save_solutions, save_tasks
from mathsynth.enumerator import SearchBudget
from mathsynth.grammar import Library
from mathsynth.metric import extract_steps
from mathsynth.programs import render_program
from mathsynth.training import RunConfig, run_training_loop


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--templates", type=int, default=30)
    ap.add_argument("--iterations", type=int, default=5)
    ap.add_argument("--eval-every", type=int, default=3)
    ap.add_argument("--budget-expansions", type=int, default=1_000_000)
    ap.add_argument("--patience", type=int, default=50_000)
    ap.add_argument("--k-programs", type=int, default=6)
    ap.add_argument("--out", default="runs/scaled")
    return ap.parse_args()


def main():
    args = parse_args()
    train, test = generate_corpus(args.seed, n_templates=args.templates)
    os.makedirs(args.out, exist_ok=True)
    save_tasks(os.path.join(args.out, "train.jsonl"), train)
    save_tasks(os.path.join(args.out, "test.jsonl"), test)
    print(f"corpus: {len(train)} train / {len(test)} held-out templates")

    config = RunConfig(
        seed=args.seed,
        iterations=args.iterations,
        eval_every=args.eval_every,
        budget=SearchBudget(
            max_expansions=args.budget_expansions, wall_timeout=1800.0
        ),
        patience=args.patience,
        k_programs=args.k_programs,
        out_dir=args.out,
    )
    t0 = time.monotonic()
    result = run_training_loop(train, test, Library.initial(), config)
    elapsed = time.monotonic() - t0

    for e in result.curve:
        test_part = (
            f"  test {e['test_solved']}/{e['test_total']}" if "test_solved" in e else ""
        )
        print(
            f"iter {e['iteration']}: train {e['train_solved']}/{e['train_total']}"
            f"{test_part}  lib {e['library_size']}"
            f"  new [{', '.join(e['new_abstractions']) or '-'}]"
            f"  mean dedup f {e['mean_dedup_f']}"
        )

    print(f"\nlibrary after {args.iterations} iterations:")
    for a in result.library.abstractions():
        print(f"  {a.name} (iter {a.origin_iteration}) = "
              f"{render_program(a.body, named=True)}")

    solutions, programs = {}, {}
    for task_id in sorted(result.best):
        prog = result.best[task_id].program
        solutions[task_id] = extract_steps(
            prog, result.tasks[task_id].input, task_id=task_id
        )
        programs[task_id] = render_program(prog, named=True)
    save_solutions(os.path.join(args.out, "solutions.json"), solutions, programs)

    final = result.curve[-1]
    print(f"\ntrain accuracy {final['train_rate']:.3f}"
          f"  held-out accuracy {final.get('test_rate', float('nan')):.3f}"
          f"  wall time {elapsed:.0f}s")
    print(f"artifacts in {args.out}/")


if __name__ == "__main__":
    main()
