import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from qbench.metrics import (
    FidelityReport, InstanceResult, aggregate_sweep, bootstrap_std, hellinger_fidelity,
    polarization_fidelity, volumetric_points,
)
from qbench.simulator import Counts

BITS3 = [format(i, "03b") for i in range(8)]


def dist3(weights):
    total = sum(weights)
    return {k: w / total for k, w in zip(BITS3, weights) if w > 0}


weights3 = st.lists(st.floats(0, 10), min_size=8, max_size=8).filter(lambda w: sum(w) > 1e-3)


# ----------------------------------------------------------------- anchors

def test_hellinger_anchors():
    assert hellinger_fidelity(Counts({"01": 1000}, 1000), {"01": 1.0}) == 1.0
    assert hellinger_fidelity({"01": 7}, {"10": 1.0}) == 0.0
    uniform = {k: 250 for k in ("00", "01", "10", "11")}
    assert hellinger_fidelity(uniform, {"10": 1.0}) == 0.25


def test_hellinger_width_mismatch():
    with pytest.raises(ValueError):
        hellinger_fidelity({"0": 1}, {"00": 1.0})
    with pytest.raises(ValueError):
        hellinger_fidelity({}, {"00": 1.0})


def test_polarization_anchors():
    assert polarization_fidelity(1.0, 8) == 1.0
    assert polarization_fidelity(1 / 8, 8) == 0.0
    assert polarization_fidelity(0.25, 4) == 0.0
    assert polarization_fidelity(0.1, 4) == 0.0
    with pytest.raises(ValueError):
        polarization_fidelity(0.5, 1)


def test_uniform_against_any_point_mass_polarizes_to_zero():
    uniform = {k: 1 for k in BITS3}
    for k in BITS3:
        fh = hellinger_fidelity(uniform, {k: 1.0})
        assert polarization_fidelity(fh, 8) == 0.0


# ---------------------------------------------------------------- bootstrap

def test_bootstrap_constant():
    assert bootstrap_std([0.7] * 5) == 0.0


def test_bootstrap_two_values_matches_analytic():
    # mean of two draws from {0, 1}: std sqrt(p(1-p)/2) with p = 1/2
    est = bootstrap_std([0.0, 1.0], resamples=100_000, seed=1)
    assert abs(est - math.sqrt(0.25 / 2)) <= 0.02


def test_bootstrap_seeded():
    vals = [0.1, 0.5, 0.9, 0.3]
    assert bootstrap_std(vals, 1000, 7) == bootstrap_std(vals, 1000, 7)
    with pytest.raises(ValueError):
        bootstrap_std([])


# --------------------------------------------------------------- properties

@given(weights3, weights3)
def test_hellinger_symmetric_and_bounded(a, b):
    p, q = dist3(a), dist3(b)
    f = hellinger_fidelity(p, q)
    assert 0.0 <= f <= 1.0
    assert math.isclose(f, hellinger_fidelity(q, p), rel_tol=1e-12, abs_tol=1e-15)


@given(weights3)
def test_hellinger_one_iff_equal(a):
    p = dist3(a)
    assert math.isclose(hellinger_fidelity(p, p), 1.0, rel_tol=1e-12)
    keys = list(p)
    assume(len(keys) >= 2)
    q = {keys[0]: 1.0}
    assert hellinger_fidelity(p, q) < 1.0


@given(weights3, weights3, st.permutations(BITS3))
def test_hellinger_relabel_invariant(a, b, perm):
    p, q = dist3(a), dist3(b)
    relabel = dict(zip(BITS3, perm))
    pr = {relabel[k]: v for k, v in p.items()}
    qr = {relabel[k]: v for k, v in q.items()}
    assert math.isclose(hellinger_fidelity(p, q), hellinger_fidelity(pr, qr), rel_tol=1e-12, abs_tol=1e-15)


@given(weights3, st.sampled_from(BITS3))
def test_polarization_below_hellinger(a, target):
    rep = FidelityReport.from_counts(dist3(a), {target: 1.0})
    assert rep.dimension == 8
    assert 0.0 <= rep.polarization_fidelity <= 1.0
    if rep.hellinger_fidelity >= 1 / 8:
        assert rep.polarization_fidelity <= rep.hellinger_fidelity + 1e-15


@given(st.integers(0, 7), st.integers(1, 500), st.integers(0, 2 ** 32 - 1))
def test_mixing_never_raises_fidelity(target, shots, seed):
    rng = np.random.default_rng(seed)
    base = rng.multinomial(shots, np.full(8, 1 / 8) * 0.2 + np.eye(8)[target] * 0.8)
    expected = {BITS3[target]: 1.0}
    prev = None
    for lam in np.linspace(0, 1, 6):
        mixed = (1 - lam) * base / shots + lam / 8
        f = hellinger_fidelity(dict(zip(BITS3, mixed)), expected)
        if prev is not None and base[target] / shots >= 1 / 8:
            assert f <= prev + 1e-12
        prev = f


# -------------------------------------------------------------- aggregation

def result(width, fh, **kw):
    return InstanceResult(width, FidelityReport(fh, polarization_fidelity(fh, 2 ** width), 2 ** width), **kw)


def test_single_instance_record():
    r = result(3, 0.8, creation_time=0.1, elapsed_time=0.3, execution_time=0.2,
               algorithmic_depth=12, normalized_depth=30)
    rec = aggregate_sweep([r])
    assert rec.mean_hellinger == 0.8 and rec.std_hellinger == 0.0 and rec.boot_hellinger == 0.0
    assert rec.mean_polarization == r.fidelity.polarization_fidelity
    assert (rec.mean_creation_time, rec.mean_elapsed_time, rec.mean_execution_time) == (0.1, 0.3, 0.2)
    assert (rec.mean_algorithmic_depth, rec.mean_normalized_depth) == (12, 30)
    assert rec.num_instances == 1


def test_three_instance_mean():
    rec = aggregate_sweep([result(2, f) for f in (1.0, 0.5, 0.0)])
    assert rec.mean_hellinger == 0.5
    assert rec.num_instances == 3
    assert rec.row()["num_circuits"] == 3


def test_mixed_widths_rejected():
    with pytest.raises(ValueError):
        aggregate_sweep([result(2, 1.0), result(3, 1.0)])
    with pytest.raises(ValueError):
        aggregate_sweep([])


def test_aggregate_deterministic_bootstrap():
    rs = [result(4, f) for f in (0.9, 0.7, 0.8, 0.6)]
    assert aggregate_sweep(rs, seed=3) == aggregate_sweep(rs, seed=3)


def test_volumetric_points():
    recs = [aggregate_sweep([result(w, 0.9, normalized_depth=10 * w)]) for w in (2, 3)]
    pts = volumetric_points(recs)
    assert [(w, d) for w, d, _ in pts] == [(2, 20.0), (3, 30.0)]
