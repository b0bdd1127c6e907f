import math

import numpy as np
import pytest

from critical_esn.signals import (
    InputSequence,
    alternating,
    constant,
    from_file,
    generate,
    iid_plus_minus,
    rng_stream,
    scaled,
)


class TestAlternating:
    def test_expected_values(self):
        assert generate(alternating(4, 1.0)).tolist() == [1.0, -1.0, 1.0, -1.0]

    def test_sign_flip_identity(self):
        u = generate(alternating(101, 0.7))
        assert np.array_equal(u[1:], -u[:-1])

    def test_first_element_is_plus_amplitude(self):
        assert generate(alternating(1, 2.5))[0] == 2.5


class TestScaled:
    def test_quarter_pi_amplitude(self):
        u = generate(scaled(alternating(2, math.pi / 4.0), 1.0))
        assert u.tolist() == [math.pi / 4.0, -math.pi / 4.0]

    def test_unit_scale_is_exact_identity(self):
        base = iid_plus_minus(500, 1.3, seed=5)
        assert np.array_equal(generate(scaled(base, 1.0)), generate(base))

    def test_scale_factor_applied(self):
        u = generate(scaled(constant(3, 2.0), 0.5))
        assert u.tolist() == [1.0, 1.0, 1.0]

    def test_gamma_must_be_positive(self):
        with pytest.raises(ValueError):
            scaled(constant(3, 1.0), 0.0)


class TestIidPlusMinus:
    def test_deterministic_per_seed(self):
        a = generate(iid_plus_minus(1000, 1.0, seed=9))
        b = generate(iid_plus_minus(1000, 1.0, seed=9))
        assert np.array_equal(a, b)

    def test_seeds_give_distinct_streams(self):
        a = generate(iid_plus_minus(1000, 1.0, seed=1))
        b = generate(iid_plus_minus(1000, 1.0, seed=2))
        assert not np.array_equal(a, b)

    def test_values_are_plus_minus_amplitude(self):
        u = generate(iid_plus_minus(2000, 0.25, seed=3))
        assert set(np.unique(u)) == {-0.25, 0.25}

    def test_empirical_mean_fair_coin(self):
        # 4-sigma band for 1e6 fair draws is +-0.004.
        u = generate(iid_plus_minus(10**6, 1.0, seed=42))
        assert abs(u.mean()) <= 0.004


class TestConstant:
    def test_values(self):
        assert generate(constant(3, -0.5)).tolist() == [-0.5, -0.5, -0.5]


class TestFromFile:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "input.txt"
        values = [0.25, -1.5, 3.0]
        path.write_text("".join(f"{v}\n" for v in values))
        assert generate(from_file(str(path))).tolist() == values

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            generate(from_file(str(tmp_path / "absent.txt")))

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("\n\n")
        with pytest.raises(ValueError):
            generate(from_file(str(path)))


class TestSpecValidation:
    def test_zero_length_rejected(self):
        with pytest.raises(ValueError):
            alternating(0, 1.0)

    def test_nonfinite_amplitude_rejected(self):
        with pytest.raises(ValueError):
            constant(5, float("nan"))

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            InputSequence(kind="sawtooth", length=3)

    def test_scaled_requires_base(self):
        with pytest.raises(ValueError):
            InputSequence(kind="scaled", gamma=1.0)


class TestRngStreams:
    def test_deterministic(self):
        a = rng_stream(7, 2).standard_normal(8)
        b = rng_stream(7, 2).standard_normal(8)
        assert np.array_equal(a, b)

    def test_streams_independent(self):
        a = rng_stream(7, 0).standard_normal(8)
        b = rng_stream(7, 1).standard_normal(8)
        assert not np.array_equal(a, b)
