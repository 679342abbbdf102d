import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from icdmt import closed_form as cf
from icdmt.checks import alpha_continuity_checks, asym_continuity_check, continuity_checks
from icdmt.curves import Piece, PiecewiseCurve, evaluate_pieces

TOL = 1e-9
ALPHAS = (0.25, 1 / 3, 0.5, 0.75, 1, 1.25, 1.5, 2)


class TestPointToPoint:
    @pytest.mark.parametrize("p, q, r, want", [
        (2, 2, 0, 4), (2, 2, 1.5, 0.5), (1, 3, 0.5, 1.5), (2, 6, 1, 5), (2, 2, 5, 0),
    ])
    def test_values(self, p, q, r, want):
        assert cf.d_ptp(p, q, r) == pytest.approx(want, abs=TOL)

    @pytest.mark.parametrize("n, r, want", [(2, 1, 1), (1, 0.3, 0.7), (3, 0, 9)])
    def test_single_user(self, n, r, want):
        assert cf.d_o_single(n, r) == pytest.approx(want, abs=TOL)

    def test_negative_rate(self):
        with pytest.raises(ValueError):
            cf.d_ptp(1, 1, -0.1)

    @given(st.integers(1, 4), st.integers(1, 4), st.floats(0, 4), st.floats(0, 4))
    def test_nonincreasing(self, p, q, r1, r2):
        lo, hi = sorted((r1, r2))
        assert cf.d_ptp(p, q, hi) <= cf.d_ptp(p, q, lo) + TOL


class TestSumRateBounds:
    @pytest.mark.parametrize("n, alpha, r, want", [
        (1, 0.5, 0.25, 1.75), (2, 2, 1, 9), (1, 0.5, 0.5, 1.0),
    ])
    def test_d_o3(self, n, alpha, r, want):
        assert cf.d_o3(n, alpha, r) == pytest.approx(want, abs=TOL)

    def test_d_o4_alias(self):
        assert cf.d_o4 is cf.d_o3

    @pytest.mark.parametrize("n, alpha, r, want", [
        (1, 1, 0.5, 2.5), (1, 0.25, 0, 2.5), (1, 0.25, 0.5, 1.0), (1, 1, 2, 0),
    ])
    def test_d_o5(self, n, alpha, r, want):
        assert cf.d_o5(n, alpha, r) == pytest.approx(want, abs=TOL)

    def test_d_o5_alpha_branches_meet(self):
        below = cf.d_o5(2, 0.5 - 1e-13, 0.5)
        above = cf.d_o5(2, 0.5 + 1e-13, 0.5)
        assert below == pytest.approx(above, abs=1e-9)
        assert above == pytest.approx(cf.d_ptp(2, 6, 0.5), abs=1e-9)

    @pytest.mark.parametrize("n, alpha, r, want", [
        (2, 1.5, 1, 13), (2, 0.75, 0.5, 10.5), (2, 1, 4, 0), (2, 1.5, 6, 0),
    ])
    def test_d_o6(self, n, alpha, r, want):
        assert cf.d_o6(n, alpha, r) == pytest.approx(want, abs=TOL)

    def test_d_o6_odd_n_unsupported(self):
        with pytest.raises(cf.UnsupportedClosedForm, match="Monte-Carlo"):
            cf.d_o6(1, 0.5, 0.2)

    def test_d_o6_odd_n_above_one(self):
        assert cf.d_o6(1, 1.5, 0.0) == pytest.approx(1 * 2 + 3)

    def test_d_o7_alias(self):
        assert cf.d_o7 is cf.d_o6

    def test_beyond_support_zero(self):
        assert cf.d_o3(2, 0.5, 50) == 0.0
        assert cf.d_o5(2, 0.5, 50) == 0.0


class TestContinuity:
    @pytest.mark.parametrize("n", [1, 2, 4])
    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_breakpoints(self, n, alpha):
        failed = [c for c in continuity_checks(n, alpha) if not c.passed]
        assert not failed

    @pytest.mark.parametrize("n", [1, 2, 4])
    def test_alpha_families(self, n):
        assert all(c.passed for c in alpha_continuity_checks(n))

    def test_d_o6b_middle_branch_placement(self):
        # second branch joins the first at n*alpha/2 and the third at n(alpha+1)/2
        n, a = 2, 0.75
        p = cf.d_o6_pieces(n, a)
        assert p[1].lo == pytest.approx(n * a / 2)
        assert p[1].hi == pytest.approx(n * (a + 1) / 2)
        assert p[1].fn(p[1].hi) == pytest.approx(p[2].fn(p[2].lo))

    @pytest.mark.parametrize("n", [2, 4])
    def test_d_o6_alpha_half(self, n):
        r = np.arange(0, 3 * n, 0.05)
        lo = [cf.d_o6(n, 0.5 - 1e-13, x) for x in r]
        hi = [cf.d_o6(n, 0.5, x) for x in r]
        assert np.allclose(lo, hi, atol=1e-9)

    @pytest.mark.parametrize("bound", [3, 5, 6])
    @pytest.mark.parametrize("alpha", [0.25, 0.75, 1.5])
    def test_positive_inside_support(self, bound, alpha):
        end = cf.support_end(bound, 2, alpha)
        fn = {3: cf.d_o3, 5: cf.d_o5, 6: cf.d_o6}[bound]
        inside = np.linspace(0, end, 50)[:-1]
        assert all(fn(2, alpha, x) > 0 for x in inside)
        assert fn(2, alpha, end) == pytest.approx(0, abs=TOL)

    @pytest.mark.parametrize("fn", [cf.d_o3, cf.d_o5, cf.d_o6])
    def test_nondecreasing_in_alpha_above_one(self, fn):
        r = np.arange(0, 6, 0.05)
        for a_lo, a_hi in [(1, 1.25), (1.25, 1.5), (1.5, 2)]:
            assert all(fn(2, a_lo, x) <= fn(2, a_hi, x) + TOL for x in r)


class TestComposites:
    @pytest.mark.parametrize("n, alpha, r1, r2, want", [
        (1, 1, 0.2, 0.4, 0.6), (2, 1, 0.5, 0.5, 2.5), (2, 0.5, 2, 2, 0), (1, 1.5, 1, 1, 0),
    ])
    def test_optimal(self, n, alpha, r1, r2, want):
        assert cf.d_ic_optimal(n, alpha, r1, r2) == pytest.approx(want, abs=TOL)

    def test_optimal_lists_all_bounds(self):
        vals = [cf.d_bound(k, 1, 1, 0.2, 0.4) for k in range(1, 8)]
        assert vals == pytest.approx([0.8, 0.6, 1.2, 1.2, 2.2, 1.6, 1.0])

    @pytest.mark.parametrize("n, r1, r2, want", [(1, 0.25, 0.25, 0.75), (2, 0.5, 0.5, 2.5),
                                                  (1, 0.5, 0.5, 0)])
    def test_alpha1(self, n, r1, r2, want):
        assert cf.d_ic_alpha1(n, r1, r2) == pytest.approx(want, abs=TOL)

    @pytest.mark.parametrize("n, alpha, r, want", [(1, 2, 0.25, 0.75), (1, 2, 0, 1),
                                                    (2, 1.25, 1, 1)])
    def test_mac(self, n, alpha, r, want):
        assert cf.d_mac(n, alpha, r) == pytest.approx(want, abs=TOL)

    def test_mac_domain(self):
        with pytest.raises(ValueError):
            cf.d_mac(1, 0.5, 0.1)

    def test_optimal_odd_n_low_alpha(self):
        with pytest.raises(cf.UnsupportedClosedForm):
            cf.d_ic_optimal(1, 0.5, 0.1, 0.1)

    def test_fifth_bound_strictly_tighter(self):
        for n in (1, 2):
            for a in (1.25, 1.5):
                assert any(cf.d_o6(n, a, 2 * r1 + r2) < cf.d_o5(n, a, r1 + r2) - 1e-9
                           for r1 in np.arange(0.05, n, 0.05) for r2 in np.arange(0, n, 0.05))


class TestAsymmetricNoCsit:
    def test_low_rate(self):
        assert cf.d_ic_nocsit_asym(1, 2, 2, 1, 0, 0) == pytest.approx(2)
        assert cf.d_ics(1, 2, 2, 1, 0) == pytest.approx(4)

    @pytest.mark.parametrize("M, N1, N2, alpha", [(1, 2, 2, 1), (1, 2, 2, 2),
                                                  (1, 2, 3, 1.5), (2, 4, 4, 1.25)])
    def test_continuity(self, M, N1, N2, alpha):
        assert asym_continuity_check(M, N1, N2, alpha).passed

    def test_negative_term_kept(self):
        # k = 0 branch at the boundary: 2 d_{1,3}(1) + (1 - 1) + 1
        piece = cf.d_ics_pieces(1, 2, 2.0)[0]
        assert piece.fn(2.0) == pytest.approx(1.0)

    @pytest.mark.parametrize("args", [(1, 1, 2, 1.0), (1, 2, 1, 1.0), (1, 2, 2, 0.5)])
    def test_preconditions(self, args):
        with pytest.raises(ValueError):
            cf.d_ic_nocsit_asym(*args, 0.1, 0.1)


class TestCurves:
    def test_sample_ptp(self):
        c = cf.sample_curve("ptp", {"p": 1, "q": 1}, 0.5)
        assert c.breakpoints == ((0.0, 1.0), (1.0, 0.0))

    def test_sample_o5_below_o3_at_high_rate(self):
        o3 = cf.sample_curve("o3", {"n": 2, "alpha": 1 / 3}, 0.01)
        o5 = cf.sample_curve("o5", {"n": 2, "alpha": 1 / 3}, 0.01)
        assert o5(0) > o3(0)
        assert any(o5(x) < o3(x) for x in np.arange(0, 4, 0.01))
        assert o3.is_nonincreasing() and o5.is_nonincreasing()

    def test_curve_rejects_unordered(self):
        with pytest.raises(ValueError):
            PiecewiseCurve(((0.0, 1.0), (0.0, 0.5)))

    def test_curve_interpolates_and_clamps(self):
        c = PiecewiseCurve(((0.0, 2.0), (1.0, 0.0)))
        assert c(0.25) == pytest.approx(1.5)
        assert c(3.0) == 0.0

    def test_json_roundtrip(self):
        c = cf.sample_curve("o3", {"n": 1, "alpha": 0.5}, 0.25, label="b3")
        back = PiecewiseCurve.from_json(c.to_json())
        assert back == c
        assert json.loads(c.to_json())["label"] == "b3"

    def test_csv_header(self):
        assert PiecewiseCurve(((0.0, 1.0), (1.0, 0.0))).to_csv().splitlines()[0] == "r,d"

    def test_zero_length_pieces_skipped(self):
        pieces = [Piece(0, 0, lambda r: 99.0), Piece(0, 1, lambda r: 1 - r)]
        assert evaluate_pieces(pieces, 0.0) == 1.0

    def test_bad_step(self):
        with pytest.raises(ValueError):
            cf.sample_curve("ptp", {"p": 1, "q": 1}, 0)
