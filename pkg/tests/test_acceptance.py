"""Exit criteria for the package, one test per criterion.

Run ``pytest tests/test_acceptance.py`` to get a pass/fail line per criterion
in the terminal summary.
"""

import itertools
import json
import math
import time

import numpy as np
import pytest

from quantum_dice import cli
from quantum_dice.die import (
    DieState,
    RollDirection,
    grid_probability,
    hidden_measurement_probability,
    state_vector_of,
)
from quantum_dice.entangled import (
    BELL_BOUND,
    TSIRELSON_BOUND,
    chsh_value,
    coincidence_distribution,
    enumerate_deterministic_chsh,
    mixture_chsh,
)
from quantum_dice.harness import (
    RunConfig,
    run_chsh_session,
    run_sequential_session,
    run_single_die_session,
    sequential_oracle,
)
from quantum_dice.hilbert import (
    Axis,
    born_probability,
    projector_for,
    total_probability_decomposition,
)

TOL = 1e-12
N = 100_000
SEED = 20240229
Z, X = RollDirection.Z, RollDirection.X
CELLS = list(itertools.product(DieState, RollDirection, (1, -1)))
FACE_PROJECTORS = [projector_for(a, s) for a in Axis for s in (1, -1)]

# Born values by state/roll/reading
BORN_TABLE = {
    (s, d, r): (1.0 if r == s.sign else 0.0) if s.axis is d else 0.5
    for s, d, r in CELLS
}


@pytest.mark.criterion(1, "Born table reproduction (16 cells, tol 1e-12)")
def test_born_table():
    assert len(BORN_TABLE) == 16
    for (s, d, r), want in BORN_TABLE.items():
        got = born_probability(state_vector_of(s), projector_for(d, r))
        assert abs(got - want) <= TOL, (s, d, r, got)


@pytest.mark.criterion(2, "Interference worked example {1, 1/4, 1/4, 1/2}")
def test_interference_example():
    d = total_probability_decomposition(
        state_vector_of(DieState.PLUS_Z), projector_for(Axis.X, 1), projector_for(Axis.Z, 1))
    got = (d.marginal, d.joint_then, d.joint_complement_then, d.interference)
    assert max(abs(g - w) for g, w in zip(got, (1.0, 0.25, 0.25, 0.5))) <= TOL
    assert abs(d.classical_sum - 0.5) <= TOL


@pytest.mark.criterion(3, "Decomposition closure on 64 cases (< 1e-12)")
def test_closure():
    cases = 0
    for s in DieState:
        for pa, pb in itertools.product(FACE_PROJECTORS, repeat=2):
            d = total_probability_decomposition(state_vector_of(s), pa, pb)
            assert abs(d.residual) < TOL
            cases += 1
    assert cases == 64


@pytest.mark.criterion(4, "Hidden-measurement oracle: exact vs Born, 1e6 grid within 1e-3, < 5 s")
def test_oracle_equivalence():
    t0 = time.perf_counter()
    for s, d, r in CELLS:
        closed = hidden_measurement_probability(s, d, r)
        born = born_probability(state_vector_of(s), projector_for(d, r))
        assert abs(closed - born) <= TOL
        assert closed == BORN_TABLE[(s, d, r)]
        assert abs(grid_probability(s, d, r, 1_000_000) - born) <= 1e-3
    assert time.perf_counter() - t0 < 5.0


@pytest.mark.criterion(5, "Monte Carlo convergence at N=1e5 within 3 sigma, < 10 s")
def test_monte_carlo_convergence():
    t0 = time.perf_counter()
    cfg = RunConfig(SEED, N)
    for s, d in itertools.product(DieState, RollDirection):
        report = run_single_die_session(cfg, s, d)
        assert report.overall_pass, report.to_json()
    half = run_single_die_session(cfg, DieState.PLUS_X, Z).row("+1").estimate
    assert half.ci_half_width == pytest.approx(0.0047, abs=1e-4)
    seq = run_sequential_session(cfg, DieState.PLUS_Z, X, Z)
    assert [r.analytic for r in seq.rows] == pytest.approx([0.25] * 4, abs=TOL)
    assert seq.overall_pass, seq.to_json()
    assert time.perf_counter() - t0 < 10.0


@pytest.mark.criterion(6, "CHSH: analytic I = 4, estimate within 0.02, 100% anti-correlation")
def test_chsh_maximal():
    assert chsh_value(coincidence_distribution).i_value == 4.0
    res = run_chsh_session(RunConfig(SEED, N))
    assert res.report.i_value == 4.0
    assert abs(res.estimated_i - 4.0) <= 0.02
    assert res.per_pair.extras["anticorrelation_violations"] == 0
    assert res.per_pair.row("ab:+1,+1").estimate.count == 0
    assert res.per_pair.row("ab:-1,-1").estimate.count == 0


@pytest.mark.criterion(7, "Local bound: 16 assignments max I = 2, 1000 mixtures I <= 2 + 1e-12")
def test_local_bound():
    bounds = enumerate_deterministic_chsh()
    assert len(bounds.values) == 16
    assert bounds.max_i == 2.0 and bounds.max_i <= BELL_BOUND + TOL
    rng = np.random.default_rng(7)
    weights = rng.dirichlet(np.ones(16), size=1000)
    assert max(mixture_chsh(w) for w in weights) <= BELL_BOUND + TOL


@pytest.mark.criterion(8, "Tsirelson comparison 4 > 2*sqrt(2) > 2, printed by the report")
def test_tsirelson(capsys):
    assert TSIRELSON_BOUND == 2 * math.sqrt(2)
    assert 4.0 > TSIRELSON_BOUND > 2.0
    assert cli.main(["bell", "--trials", "1000", "--seed", "1"]) == 0
    assert "2.8284" in capsys.readouterr().out
    assert cli.main(["bell", "--trials", "1000", "--seed", "1", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["analytic"]["tsirelson_bound"] == TSIRELSON_BOUND
    assert doc["analytic"]["I"] > doc["analytic"]["tsirelson_bound"] > doc["analytic"]["bell_bound"]


@pytest.mark.criterion(9, "Reproducibility: byte-identical JSON across runs and lane counts")
def test_reproducibility():
    cfg = RunConfig(SEED, N)
    a = run_sequential_session(cfg, DieState.PLUS_Z, X, Z).to_json()
    b = run_sequential_session(cfg, DieState.PLUS_Z, X, Z).to_json()
    c = run_sequential_session(cfg, DieState.PLUS_Z, X, Z, lanes=4).to_json()
    assert a == b == c
    assert run_chsh_session(cfg).to_json() == run_chsh_session(cfg, lanes=4).to_json()


@pytest.mark.criterion(10, "Statistical power: 0.05 oracle corruption fails at N=1e5")
def test_statistical_power():
    cfg = RunConfig(SEED, N)

    def bad_single(s, d, r):
        return hidden_measurement_probability(s, d, r) + 0.05 * r

    def bad_sequential(s, first, then, r1, r2):
        return sequential_oracle(s, first, then, r1, r2) + 0.05 * r1 * r2

    assert run_single_die_session(cfg, DieState.PLUS_X, Z).overall_pass
    assert not run_single_die_session(cfg, DieState.PLUS_X, Z, oracle=bad_single).overall_pass
    assert run_sequential_session(cfg, DieState.PLUS_Z, X, Z).overall_pass
    assert not run_sequential_session(cfg, DieState.PLUS_Z, X, Z, oracle=bad_sequential).overall_pass
