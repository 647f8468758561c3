"""Acceptance criteria, one test each. Every test prints a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` (the lines also appear
without ``-s``).
"""

import contextlib
import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from uca_prioritizer.cli import main
from uca_prioritizer.ej import normalize, rank_competition, saw
from uca_prioritizer.matrix import priority_counts
from uca_prioritizer.mcs import (
    SimulationConfig,
    final_ej_ordering,
    run_mcs,
    simulate_ranks,
    summarize,
)
from uca_prioritizer.model import MonteCarloStats, Stability
from uca_prioritizer.pipeline import run_pipeline
from uca_prioritizer.sif import assign_pms, lookup_cif

from conftest import CASE_STUDY, WORKED, WORKED_IDS
from oracles import brute_never_outranks

pytestmark = pytest.mark.acceptance

TESTS_DIR = Path(__file__).parent


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def check(name):
        start = time.perf_counter()
        try:
            yield
        except BaseException as exc:
            with capsys.disabled():
                print(f"\nFAIL  {name}: {type(exc).__name__}: {exc}")
            raise
        with capsys.disabled():
            print(f"\nPASS  {name} ({time.perf_counter() - start:.2f}s)")
    return check


def test_normalization_golden(criterion):
    expected = np.array([
        [1.0, 1.0, 0.5, 1.0, 0.0],
        [0.5, 0.0, 1.0, 1.0, 1.0],
        [0.0, 0.0, 0.0, 0.0, 1.0],
    ])
    with criterion("normalization golden (1e-9, < 1 s)"):
        start = time.perf_counter()
        got = normalize(WORKED)
        assert time.perf_counter() - start < 1.0
        assert np.abs(got - expected).max() <= 1e-9


def test_saw_golden(criterion):
    with criterion("SAW golden scores 3.5/3.5/1.0, ranks 1/1/3"):
        scores = saw(normalize(WORKED))
        assert scores.tolist() == [3.5, 3.5, 1.0]
        assert rank_competition(scores).tolist() == [1, 1, 3]


def test_two_simulation_ej_example(criterion):
    with criterion("two-simulation EJ example"):
        out = [summarize(r, 1) for r in [(1, 2), (2, 1), (3, 3)]]
        assert [s.mean_rank for s in out] == [1.5, 1.5, 3.0]
        assert [s.rank_std for s in out] == [0.5, 0.5, 0.0]
        assert [s.ej_score for s in out] == [2.0, 2.0, 3.0]


def test_ci_tie_break_ordering(criterion):
    # stats consistent with EJ 2.00 / CI 1.44, EJ 2.00 / CI 1.53, EJ 3.00 / CI 3.00 at N = 1000
    rows = [("UCA-1.1.1", 1.4, 0.6), ("UCA-1.2.1", 1.5, 0.5), ("UCA-2.1.1", 3.0, 0.0)]
    with criterion("CI tie-break ordering 1/2/3"):
        stats = []
        for uid, mean, std in rows:
            stats.append(MonteCarloStats(uid, 1, mean, std, mean + std,
                                         mean + 1.96 * std / 1000 ** 0.5, Stability.STABLE, 1000))
        assert [round(s.ej_score, 2) for s in stats] == [2.0, 2.0, 3.0]
        assert [round(s.ci_upper, 2) for s in stats] == [1.44, 1.53, 3.0]
        ranks = {r.stats.uca_id: r.final_rank for r in final_ej_ordering(stats[::-1])}
        assert [ranks[uid] for uid, _, _ in rows] == [1, 2, 3]


def test_case_study_pms_cif_sif(criterion, dataset):
    with criterion("case-study PMS/CIF/SIF (< 1 s)"):
        start = time.perf_counter()
        losses = dataset.loss_map
        controllers = dataset.controller_map
        seen = {}
        for uca in dataset.ucas:
            pms, _ = assign_pms(uca, losses)
            cif = lookup_cif(uca, controllers)
            seen[uca.id] = (pms, cif, pms * cif)
        assert time.perf_counter() - start < 1.0
        assert seen == {uid: (p, c, p * c) for uid, (p, c, _) in CASE_STUDY.items()}
        assert seen["UCA-29.5.1"][:2] == (12, 5)
        assert seen["UCA-13.5.1"][:2] == (4, 6)


def test_zero_perturbation_degeneracy(criterion, dataset):
    from uca_prioritizer.ej import initial_ranking, score_matrix
    with criterion("zero-perturbation degeneracy (N = 100)"):
        rng = np.random.default_rng(0)
        cases = [WORKED, score_matrix(dataset)[1]]
        cases += [rng.integers(0, 4, size=(int(rng.integers(1, 15)), 5)).astype(float)
                  for _ in range(20)]
        for X in cases:
            ranks = simulate_ranks(X, SimulationConfig(num_simulations=100),
                                   sampler=lambda g, shape, v: np.zeros(shape))
            assert (ranks == initial_ranking(X)[1][:, None]).all()


def test_mcs_statistical_sanity(criterion):
    with criterion("MCS sanity on worked example (seed 0, N = 1000, < 5 s)"):
        hits, best = brute_never_outranks(WORKED.tolist(), target=2, draws=100_000)
        assert hits == 0 and best == 3
        start = time.perf_counter()
        dist = run_mcs(WORKED, SimulationConfig(num_simulations=1000, variation_range=0.10, seed=0),
                       ids=WORKED_IDS)
        s = summarize(dist["UCA-2.1.1"], 3)
        assert time.perf_counter() - start < 5.0
        assert s.mean_rank == 3.0 and s.rank_std == 0.0


def test_matrix_qualitative_placement(criterion, dataset):
    with criterion("matrix qualitative placement on the 10-UCA fixture"):
        m = run_pipeline(dataset).matrix
        for uid in ("UCA-21.5.1", "UCA-18.2.1"):
            assert m.record(uid).priority.value in {"P1", "P2"}, uid
        for uid in ("UCA-13.5.1", "UCA-47.1.1"):
            assert m.record(uid).priority.value in {"P4", "P5"}, uid
        placed = [u for c in m.cells for u in c.ucas]
        assert sorted(placed) == sorted(u.id for u in dataset.ucas)
        assert sum(priority_counts(m).values()) == 10


def test_invariant_suites_standalone(criterion):
    with criterion("invariant suites standalone (< 30 s)"):
        start = time.perf_counter()
        proc = subprocess.run(
            [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
             str(TESTS_DIR / "test_invariants.py")],
            cwd=TESTS_DIR, capture_output=True, text=True)
        elapsed = time.perf_counter() - start
        assert proc.returncode == 0, proc.stdout[-2000:]
        assert "5 passed" in proc.stdout
        assert elapsed < 30.0, elapsed


def test_determinism(criterion, tmp_path):
    with criterion("determinism: byte-identical stats.json and matrix.json"):
        dirs = []
        for name in ("first", "second"):
            assert main(["compute", "--fixture", "--out", str(tmp_path / name)]) == 0
            (run_dir,) = [d for d in (tmp_path / name).iterdir() if d.is_dir()]
            dirs.append(run_dir)
        for fname in ("stats.json", "matrix.json"):
            assert (dirs[0] / fname).read_bytes() == (dirs[1] / fname).read_bytes(), fname
        json.loads((dirs[0] / "stats.json").read_text())
