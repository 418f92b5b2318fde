"""Dynamical-time machinery: s-sweeps, coupled pairs, the free/stuck split."""

import numpy as np
import pytest

from ddw import kernels
from ddw.dynamics import (
    coupled_pair,
    decompose_pair,
    marked_contact_count,
    path_positions_on_grid,
    s_sweep,
)
from ddw.field import ArrowField


@pytest.fixture(scope="module")
def field():
    return ArrowField(0.5, 77, s_max=6.0)


def test_sweep_matches_grid_queries(field):
    sweep = s_sweep(field, 2, 0, 40, 0.0, 6.0)
    rng = np.random.default_rng(3)
    ss = rng.uniform(0.0, 6.0, size=100)
    grid = path_positions_on_grid(field, 2, 0, 40, ss)
    for row, s in enumerate(ss):
        np.testing.assert_array_equal(grid[row], sweep.path_at(float(s)))


def test_sweep_breaks_structure(field):
    sweep = s_sweep(field, 0, 0, 30, 0.5, 5.5)
    assert sweep.breaks[0] == 0.5
    assert np.all(np.diff(sweep.breaks) > 0)
    assert sweep.breaks[-1] <= 5.5
    assert len(sweep.paths) == sweep.pieces
    for m in range(sweep.pieces - 1):
        assert np.any(sweep.paths[m] != sweep.paths[m + 1])


def test_sweep_paths_are_walks(field):
    sweep = s_sweep(field, 4, 0, 25, 0.0, 6.0)
    for path in sweep.paths:
        assert path[0] == 4
        assert np.all(np.abs(np.diff(path)) == 1)


def test_sweep_endpoint_at(field):
    sweep = s_sweep(field, 2, 0, 40, 0.0, 6.0)
    for s in (0.0, 1.7, 5.99):
        assert sweep.endpoint_at(s) == sweep.path_at(s)[-1]


def test_sweep_rejects_bad_inputs(field):
    with pytest.raises(ValueError):
        s_sweep(field, 1, 0, 10)  # odd start
    with pytest.raises(ValueError):
        s_sweep(field, 0, 0, 10, 2.0, 1.0)  # reversed window
    with pytest.raises(ValueError):
        s_sweep(field, 0, 0, 10, 0.0, 7.0)  # beyond s_max


def test_coupled_pair_codes_and_increments(field):
    pair = coupled_pair(field, 0.8, 2.3, 200)
    w1, w2 = pair.walk1, pair.walk2
    assert set(np.unique(pair.codes)) <= {0, 1, 2}
    for t in range(200):
        together = w1[t] == w2[t]
        assert (pair.codes[t] > 0) == together
        if pair.codes[t] == 1:
            assert pair.inc1[t] == pair.inc2[t]
    assert np.all(np.abs(pair.inc1) == 1)
    assert np.all(np.abs(pair.inc2) == 1)


def test_coupled_pair_walks_follow_field(field):
    pair = coupled_pair(field, 0.8, 2.3, 120)
    w1 = pair.walk1
    for t in range(120):
        assert pair.inc1[t] == field.arrow_at(int(w1[t]), t, 0.8)


def test_equal_times_give_identical_walks(field):
    pair = coupled_pair(field, 1.5, 1.5, 100)
    np.testing.assert_array_equal(pair.inc1, pair.inc2)
    assert np.all(pair.codes >= 1)


def test_decomposition_reconstructs_exactly(field):
    for seed in range(30):
        fld = ArrowField(1.0, 5000 + seed, s_max=0.7)
        pair = coupled_pair(fld, 0.0, 0.7, 500)
        dec = decompose_pair(pair)
        np.testing.assert_array_equal(dec.reassembled_walk1(), pair.walk1)
        np.testing.assert_array_equal(dec.reassembled_walk2(), pair.walk2)


def test_decomposition_bookkeeping(field):
    pair = coupled_pair(field, 0.3, 1.1, 400)
    dec = decompose_pair(pair)
    # C counts free steps and is nondecreasing with unit increments
    assert dec.C[0] == 0
    steps = np.diff(dec.C)
    assert set(np.unique(steps)) <= {0, 1}
    assert dec.C[-1] == int(np.sum(dec.free_mask))
    # free time change inverse: C(C^{-1}(m)) == m wherever it lands inside
    cinv = dec.free_clock_inverse()
    for m, t in enumerate(cinv):
        if t < len(dec.C):
            assert dec.C[t] == m


def test_decomposition_free_steps_are_the_nonshared_ones(field):
    pair = coupled_pair(field, 0.3, 1.1, 300)
    dec = decompose_pair(pair)
    np.testing.assert_array_equal(dec.free_mask, pair.codes != 1)
    n_free = int(dec.free_mask.sum())
    assert len(dec.S1) == n_free + 1
    assert len(dec.S3) == 300 - n_free + 1


def test_meeting_gaps_nonnegative_and_counted(field):
    pair = coupled_pair(field, 0.2, 2.2, 600)
    gaps = pair.meeting_gaps()
    assert np.all(gaps >= 0)
    assert len(gaps) == int(np.sum(pair.codes == 2))


def test_holding_kernel_law_is_geometric():
    # each co-occupied step rings independently: P(gap >= k) = exp(-theta k)
    theta = 0.8
    gaps = kernels.holding_time_samples(4, 1.0, theta, 0.0, theta, 2_000, 20_000)
    tail1 = float(np.mean(gaps >= 1))
    tail2 = float(np.mean(gaps >= 2))
    assert abs(tail1 - np.exp(-theta)) < 0.015
    assert abs(tail2 - np.exp(-2 * theta)) < 0.015


def test_marked_contacts(field):
    res = marked_contact_count(field, 1.0, 250, dual_x=1)
    assert 0 <= res.marked <= res.contacts
    zero = marked_contact_count(field, 0.0, 250, dual_x=1)
    assert zero.marked == 0
    assert zero.contacts == res.contacts  # marking never changes the web at s=0


def test_marked_fraction_tracks_ring_probability():
    lam, s = 1.0, 0.9
    want = 1.0 - np.exp(-lam * s)
    contacts = 0
    marked = 0
    for seed in range(400):
        fld = ArrowField(lam, 40_000 + seed, s_max=1.0)
        res = marked_contact_count(fld, s, 120, dual_x=1)
        contacts += res.contacts
        marked += res.marked
    assert contacts > 500
    p_hat = marked / contacts
    assert abs(p_hat - want) < 4.0 * np.sqrt(want * (1 - want) / contacts) + 0.01
