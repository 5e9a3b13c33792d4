import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from occsim.distributions import EmpiricalDistribution, point_mass


class FixedRng:
    """Stand-in generator returning scripted uniforms."""

    def __init__(self, values):
        self.values = list(values)

    def random(self):
        return self.values.pop(0)


def test_from_weights_aggregates_duplicates():
    d = EmpiricalDistribution.from_weights(
        np.array([3.0, 1.0, 3.0]), np.array([2.0, 1.0, 4.0]), unit="minutes"
    )
    assert list(d.support) == [1.0, 3.0]
    assert np.allclose(d.probs, [1 / 7, 6 / 7])
    assert d.unit == "minutes"


def test_inverse_cdf_boundaries():
    d = EmpiricalDistribution(np.array([10.0, 20.0, 30.0]), np.array([0.2, 0.5, 0.3]))
    # cumulative edges are 0.2 and 0.7; a draw equal to an edge falls right
    assert d.sample(FixedRng([0.19])) == 10.0
    assert d.sample(FixedRng([0.2])) == 20.0
    assert d.sample(FixedRng([0.69999])) == 20.0
    assert d.sample(FixedRng([0.7])) == 30.0
    assert d.sample(FixedRng([0.999999])) == 30.0


def test_cdf_at_right_continuous():
    d = EmpiricalDistribution(np.array([1.0, 2.0]), np.array([0.4, 0.6]))
    pts = np.array([0.5, 1.0, 1.5, 2.0, 3.0])
    assert np.allclose(d.cdf_at(pts), [0.0, 0.4, 0.4, 1.0, 1.0])


def test_mean():
    d = EmpiricalDistribution(np.array([0.0, 10.0]), np.array([0.25, 0.75]))
    assert d.mean() == pytest.approx(7.5)


def test_point_mass_degenerate():
    d = point_mass(9.0, unit="minutes")
    rng = np.random.default_rng(0)
    assert all(d.sample(rng) == 9.0 for _ in range(5))
    assert d.mean() == 9.0


def test_validation_errors():
    with pytest.raises(ValueError, match="strictly increasing"):
        EmpiricalDistribution(np.array([1.0, 1.0]), np.array([0.5, 0.5]))
    with pytest.raises(ValueError, match="nonnegative"):
        EmpiricalDistribution(np.array([1.0, 2.0]), np.array([-0.1, 1.1]))
    with pytest.raises(ValueError, match="sum to"):
        EmpiricalDistribution(np.array([1.0, 2.0]), np.array([0.5, 0.4]))
    with pytest.raises(ValueError, match="align"):
        EmpiricalDistribution(np.array([1.0, 2.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        EmpiricalDistribution.from_weights(np.array([]))


def test_round_trip(tmp_path):
    d = EmpiricalDistribution(
        np.array([1.0, 2.5, 7.0]), np.array([0.125, 0.5, 0.375]), unit="steps"
    )
    path = tmp_path / "d.dist"
    d.write(path)
    back = EmpiricalDistribution.read(path)
    assert back.unit == "steps"
    assert np.array_equal(back.support, d.support)
    assert np.allclose(back.probs, d.probs, atol=1e-12)


def test_read_missing_unit_header(tmp_path):
    path = tmp_path / "bad.dist"
    path.write_text("1.0,1.0\n")
    with pytest.raises(ValueError, match="unit header"):
        EmpiricalDistribution.read(path)


@given(
    st.lists(st.floats(-50, 50), min_size=1, max_size=20, unique=True),
    st.integers(0, 2**32 - 1),
)
def test_sampling_hits_only_support(values, seed):
    values = sorted(values)
    probs = np.ones(len(values)) / len(values)
    d = EmpiricalDistribution(np.array(values), probs)
    rng = np.random.default_rng(seed)
    support = set(values)
    assert all(d.sample(rng) in support for _ in range(20))


@given(st.integers(0, 2**32 - 1))
def test_empirical_frequencies_converge(seed):
    d = EmpiricalDistribution(np.array([0.0, 1.0, 2.0]), np.array([0.6, 0.3, 0.1]))
    rng = np.random.default_rng(seed)
    draws = np.array([d.sample(rng) for _ in range(4000)])
    freq = np.array([(draws == v).mean() for v in d.support])
    assert np.all(np.abs(freq - d.probs) < 0.05)
