import math

import numpy as np
import pytest

from icdmt.channel import (
    AntennaProfile,
    ChannelFileError,
    ChannelRealization,
    ScalingProfile,
    achievable_region,
    dump_channel,
    exponent_histogram,
    hk_power_split,
    load_channel,
    mutual_info_bounds,
    mutual_info_bounds_batch,
    region_gap,
    sample_channel,
    sample_channels,
    upper_region,
)

SCALAR = AntennaProfile.symmetric(1)


def const(value, shape=(1, 1)):
    return ChannelRealization(*[np.full(shape, value, dtype=complex)] * 4)


class TestProfiles:
    def test_symmetric(self):
        assert AntennaProfile.symmetric(2).is_symmetric()
        assert not AntennaProfile(1, 2, 1, 2).is_symmetric()

    def test_shapes(self):
        s = AntennaProfile(1, 2, 3, 4).shapes()
        assert s == {"h11": (2, 1), "h12": (4, 1), "h21": (2, 3), "h22": (4, 3)}

    @pytest.mark.parametrize("bad", [0, -1, 1.5])
    def test_invalid_counts(self, bad):
        with pytest.raises(ValueError):
            AntennaProfile(bad, 1, 1, 1)

    def test_scaling_sweep(self):
        s = ScalingProfile(1.0, (0, 10))
        assert s.rho == pytest.approx([1.0, 10.0])
        with pytest.raises(ValueError):
            ScalingProfile(1.0, (10, 0))
        with pytest.raises(ValueError):
            ScalingProfile(1.0, (10,))
        with pytest.raises(ValueError):
            ScalingProfile(-0.1, (0, 1))

    def test_realization_validation(self):
        with pytest.raises(ValueError, match="non-finite"):
            ChannelRealization(np.array([[np.inf]]), *[np.ones((1, 1))] * 3)
        with pytest.raises(ValueError):
            ChannelRealization(np.ones((2, 1)), np.ones((1, 1)), np.ones((1, 1)), np.ones((1, 1)))


class TestSampling:
    def test_deterministic(self):
        a = sample_channel(AntennaProfile.symmetric(2), 7, 11)
        b = sample_channel(AntennaProfile.symmetric(2), 7, 11)
        for name in ("h11", "h12", "h21", "h22"):
            assert np.array_equal(getattr(a, name), getattr(b, name))

    def test_trial_independent_of_batching(self):
        p = AntennaProfile(1, 2, 2, 1)
        whole = sample_channels(p, 3, 0, 50)
        part = sample_channels(p, 3, 20, 5)
        for w, q in zip(whole, part):
            assert np.array_equal(w[20:25], q)

    def test_seeds_differ(self):
        assert not np.array_equal(sample_channel(SCALAR, 1, 0).h11, sample_channel(SCALAR, 2, 0).h11)

    def test_scalar_shapes(self):
        h = sample_channel(SCALAR, 0, 0)
        assert all(getattr(h, k).shape == (1, 1) for k in ("h11", "h12", "h21", "h22"))

    def test_unit_variance(self):
        h11 = sample_channels(SCALAR, 5, 0, 100_000)[0]
        assert np.mean(np.abs(h11) ** 2) == pytest.approx(1.0, abs=0.02)
        assert np.var(h11.real) == pytest.approx(0.5, abs=0.01)
        assert abs(np.mean(h11)) < 0.01


class TestBounds:
    def test_zero_channel(self):
        assert mutual_info_bounds(const(0), 100.0, 1.0).as_tuple() == (0.0,) * 7

    def test_scalar_ones(self):
        b = mutual_info_bounds(const(1), 1.0, 1.0)
        assert b.ib1 == pytest.approx(1.0)
        assert b.ib2 == pytest.approx(1.0)
        assert b.ib3 == pytest.approx(math.log2(3) + math.log2(1.5))
        assert b.ib4 == pytest.approx(b.ib3)
        assert b[5] == b.ib5

    def test_swap_symmetry(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            p = AntennaProfile(2, 3, 1, 2)
            mats = {k: rng.normal(size=s) + 1j * rng.normal(size=s) for k, s in p.shapes().items()}
            h = ChannelRealization(**mats)
            b = mutual_info_bounds(h, 50.0, 0.6).as_tuple()
            s = mutual_info_bounds(h.swapped(), 50.0, 0.6).as_tuple()
            assert s == pytest.approx((b[1], b[0], b[3], b[2], b[4], b[6], b[5]))
            assert h.swapped().profile == p.swapped()

    def test_monotone_in_rho(self):
        h = sample_channels(AntennaProfile.symmetric(2), 9, 0, 200)
        prev = None
        for rho in (1.0, 10.0, 100.0, 1000.0):
            cur = mutual_info_bounds_batch(*h, rho, 0.7)
            if prev is not None:
                assert np.all(cur >= prev - 1e-9)
            prev = cur

    def test_nonnegative(self):
        h = sample_channels(AntennaProfile(1, 2, 2, 1), 1, 0, 100)
        assert np.all(mutual_info_bounds_batch(*h, 0.01, 2.0) >= 0)

    def test_invalid_rho(self):
        with pytest.raises(ValueError):
            mutual_info_bounds(const(1), 0.0, 1.0)

    def test_non_finite_batch(self):
        h = [np.ones((1, 1, 1), dtype=complex)] * 4
        h[0] = np.full((1, 1, 1), np.nan, dtype=complex)
        with pytest.raises(ValueError):
            mutual_info_bounds_batch(*h, 10.0, 1.0)


class TestPowerSplit:
    def test_scalar(self):
        k11, k12, k21, k22 = hk_power_split(const(1), 1.0, 1.0)
        assert k11[0, 0] == pytest.approx(0.5)
        assert k12[0, 0] == pytest.approx(0.25)

    def test_zero_cross_link(self):
        _, k12, _, _ = hk_power_split(const(0), 10.0, 1.0)
        assert k12[0, 0] == pytest.approx(0.5)

    def test_power_constraint_and_pd(self):
        p = AntennaProfile(2, 2, 3, 2)
        h = sample_channel(p, 4, 0)
        k11, k12, k21, k22 = hk_power_split(h, 100.0, 1.2)
        assert np.allclose(k11, np.eye(2) / 2)
        for common, private, m in ((k11, k12, 2), (k21, k22, 3)):
            assert np.allclose(private, private.conj().T)
            assert np.all(np.linalg.eigvalsh(private) > 0)
            assert np.trace(common + private).real <= m + 1e-12


class TestRegions:
    def test_scalar_offsets(self):
        h = const(1)
        up = upper_region(h, 1.0, 1.0)
        b = mutual_info_bounds(h, 1.0, 1.0)
        assert [c.rhs for c in up] == pytest.approx(list(b.as_tuple()))
        ach = achievable_region(h, 10.0, 1.0)
        b10 = mutual_info_bounds(h, 10.0, 1.0)
        for c in ach:
            assert c.rhs == pytest.approx(max(0.0, b10[c.bound] - 2 * (c.a1 + c.a2)))

    def test_coefficients(self):
        up = upper_region(const(1), 1.0, 1.0)
        assert [(c.a1, c.a2) for c in up] == [(1, 0), (0, 1), (1, 1), (1, 1), (1, 1), (2, 1), (1, 2)]

    @pytest.mark.parametrize("n", [1, 2])
    def test_nesting_and_constant_gap(self, n):
        p = AntennaProfile.symmetric(n)
        c = math.log2(n)
        for t in range(50):
            h = sample_channel(p, 17, t)
            for db in (10, 30):
                rho = 10 ** (db / 10)
                up = upper_region(h, rho, 0.8)
                raw = achievable_region(h, rho, 0.8, clip=False)
                clipped = achievable_region(h, rho, 0.8)
                for u, a, k in zip(up, raw, clipped):
                    assert k.rhs <= u.rhs + 1e-12
                    want = u.a1 * (n * c + 2 * n) + u.a2 * (n * c + 2 * n)
                    assert u.rhs - a.rhs == pytest.approx(want, abs=1e-9)
                    assert region_gap(p, u.bound) == pytest.approx(want, abs=1e-12)


class TestChannelFiles:
    def test_roundtrip(self, tmp_path):
        h = sample_channel(AntennaProfile(1, 2, 2, 1), 3, 1)
        path = tmp_path / "h.json"
        path.write_text(dump_channel(h))
        back = load_channel(path)
        for k in ("h11", "h12", "h21", "h22"):
            assert np.array_equal(getattr(back, k), getattr(h, k))
        assert load_channel(dump_channel(h)).profile == h.profile

    @pytest.mark.parametrize("text", ["{", '{"profile": {}}',
                                      '{"profile": {"m1":1,"n1":1,"m2":1,"n2":1}, "h11": [[1]]}'])
    def test_malformed(self, text):
        with pytest.raises(ChannelFileError):
            load_channel(text)

    def test_shape_mismatch(self):
        obj = dump_channel(const(1)).replace('"n1": 1', '"n1": 2')
        with pytest.raises(ChannelFileError, match="shape"):
            load_channel(obj)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ChannelFileError):
            load_channel(tmp_path / "none.json")


class TestExponentHistogram:
    def test_no_interference_matches_rayleigh(self):
        s = exponent_histogram(SCALAR, 0.0, 1e4, 50_000, 1)
        b = s.beta[:, 0]
        # unit tail slope in exponent space: Pr(beta > x) ~ rho^-x
        slope = math.log(np.mean(b > 0.25) / np.mean(b > 0.75)) / math.log(1e4)
        assert slope == pytest.approx(0.5, abs=0.1)
        assert np.median(b) < 0.25

    def test_strong_interference_concentrates(self):
        s = exponent_histogram(SCALAR, 1.0, 1e4, 5000, 2)
        assert np.median(s.beta[:, 0]) == pytest.approx(2.0, abs=0.15)

    def test_deterministic(self):
        a = exponent_histogram(AntennaProfile.symmetric(2), 0.5, 1e3, 100, 3)
        b = exponent_histogram(AntennaProfile.symmetric(2), 0.5, 1e3, 100, 3)
        assert np.array_equal(a.beta, b.beta)
        counts, _ = a.histogram("gamma", 1, bins=10)
        assert counts.sum() == 100

    def test_whitening_floor_holds_empirically(self):
        # beta_1 >= (alpha - gamma_2)^+ + (alpha - a_2)^+ up to O(1/log rho)
        s = exponent_histogram(AntennaProfile.symmetric(2), 0.25, 1e6, 5000, 4)
        floor = np.maximum(0.25 - s.gamma[:, 1], 0) + np.maximum(0.25 - s.alpha_vec[:, 1], 0)
        assert np.quantile(s.beta[:, 0] - floor, 0.001) > -0.15

    def test_requires_symmetric(self):
        with pytest.raises(ValueError):
            exponent_histogram(AntennaProfile(1, 2, 1, 2), 1.0, 100.0, 10, 0)
