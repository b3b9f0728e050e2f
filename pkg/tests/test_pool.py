"""Candidate enumeration: kinds, costs, deterministic ordering, recounts."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lrsprune.calibration import planted_matrix
from lrsprune.pool import Candidate, CandidateKind, build_pool, param_count
from lrsprune.rpca import decompose


def rank2_plus_entries():
    """10x6 layer with two planted singular directions and 7 sparse entries."""
    rng = np.random.default_rng(3)
    q1, _ = np.linalg.qr(rng.standard_normal((10, 2)))
    q2, _ = np.linalg.qr(rng.standard_normal((6, 2)))
    l = (q1 * np.array([5.0, 2.0])) @ q2.T
    s = np.zeros((10, 6))
    coords = [(0, 0), (1, 3), (2, 5), (4, 1), (6, 2), (7, 4), (9, 0)]
    for k, (r, c) in enumerate(coords):
        s[r, c] = (-1.0) ** k * (10.0 - k)
    return l, s


class TestBuildPool:
    def test_empty_parts_make_empty_pool(self):
        pool = build_pool(0, np.zeros((5, 4)), np.zeros((5, 4)))
        assert pool.size == 0
        assert pool.n_triplets == 0
        assert pool.total_cost == 0
        assert pool.costs().shape == (0,)

    def test_rank2_with_seven_entries(self):
        l, s = rank2_plus_entries()
        pool = build_pool("layer", l, s)
        assert pool.n_triplets == 2
        assert pool.size == 9
        triplets = pool.candidates[:2]
        entries = pool.candidates[2:]
        assert all(c.kind is CandidateKind.SINGULAR_TRIPLET for c in triplets)
        assert all(c.cost == 16 for c in triplets)
        assert all(c.kind is CandidateKind.SPARSE_ENTRY for c in entries)
        assert all(c.cost == 1 for c in entries)
        assert pool.total_cost == 2 * 16 + 7 == 39

    def test_triplets_sorted_by_descending_sigma(self):
        l, s = rank2_plus_entries()
        pool = build_pool(0, l, s)
        sig = [c.magnitude for c in pool.candidates[: pool.n_triplets]]
        assert sig == sorted(sig, reverse=True)
        np.testing.assert_allclose(sig, [5.0, 2.0], rtol=1e-12)

    def test_entries_sorted_by_descending_magnitude(self):
        l, s = rank2_plus_entries()
        pool = build_pool(0, l, s)
        mags = [c.magnitude for c in pool.candidates[pool.n_triplets :]]
        assert mags == sorted(mags, reverse=True)
        assert mags[0] == 10.0 and mags[-1] == 4.0

    def test_magnitude_ties_break_by_row_then_col(self):
        s = np.zeros((3, 6))
        s[1, 3] = 2.0
        s[0, 5] = -2.0
        s[0, 2] = 2.0
        pool = build_pool(0, np.zeros((3, 6)), s)
        assert [c.index for c in pool.candidates] == [(0, 2), (0, 5), (1, 3)]

    def test_recounts_match_decomposition_diagnostics(self, rng):
        w, _, _ = planted_matrix(30, 20, 2, rng)
        res = decompose(w)
        pool = build_pool(0, res.l, res.s)
        assert pool.n_triplets == res.rank_l
        nnz = int(np.count_nonzero(res.s))
        assert pool.size - pool.n_triplets == nnz
        assert pool.total_cost == res.rank_l * (30 + 20) + nnz

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            build_pool(0, np.zeros((3, 3)), np.zeros((3, 4)))

    def test_deterministic(self):
        l, s = rank2_plus_entries()
        p1, p2 = build_pool(0, l, s), build_pool(0, l, s)
        assert p1.candidates == p2.candidates
        assert p1.entry_values.tobytes() == p2.entry_values.tobytes()
        assert p1.triplet_sigma.tobytes() == p2.triplet_sigma.tobytes()


class TestParamCount:
    def test_zero_mask(self):
        l, s = rank2_plus_entries()
        pool = build_pool(0, l, s)
        assert param_count(pool, np.zeros(pool.size)) == 0

    def test_full_mask(self):
        l, s = rank2_plus_entries()
        pool = build_pool(0, l, s)
        assert param_count(pool, np.ones(pool.size)) == pool.total_cost

    def test_single_triplet(self):
        l, s = rank2_plus_entries()
        pool = build_pool(0, l, s)
        mask = np.zeros(pool.size)
        mask[0] = 1
        assert param_count(pool, mask) == 16

    def test_wrong_length_rejected(self):
        l, s = rank2_plus_entries()
        pool = build_pool(0, l, s)
        with pytest.raises(ValueError):
            param_count(pool, np.zeros(pool.size + 1))

    @given(bits=st.lists(st.integers(min_value=0, max_value=1), min_size=9, max_size=9))
    def test_equals_cost_dot_mask(self, bits):
        l, s = rank2_plus_entries()
        pool = build_pool(0, l, s)
        mask = np.array(bits)
        assert param_count(pool, mask) == int(pool.costs() @ mask)


def test_candidate_dataclass_fields():
    c = Candidate(CandidateKind.SPARSE_ENTRY, (2, 3), 1.5, 1)
    assert c.index == (2, 3)
    assert c.magnitude == 1.5
    assert c.cost == 1
