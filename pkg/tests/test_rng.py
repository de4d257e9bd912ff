import numpy as np
import pytest
from scipy import stats

from covkit.rng import Stream, stream


def test_frozen_raw_vector():
    assert stream(42).raw(3).tolist() == [1587852024645073290, 2611271723512893552,
                                          4982337093617253890]


def test_frozen_uniform_vector():
    assert stream(42).uniform(3).tolist() == [0.0860776307352848, 0.14155732377913238,
                                              0.270093035047747]


def test_frozen_normal_vector():
    assert stream(42, "cox").normal(3).tolist() == [0.6927962547431983, -0.5270716724905554,
                                                    -0.1870922135582596]


def test_streams_rebuild_from_seed_and_path():
    a = stream(7, "pd", 3).normal((4, 2))
    b = Stream(7).child("pd", 3).normal((4, 2))
    assert np.array_equal(a, b)


@pytest.mark.parametrize("path", [("pd", 0), ("pd", 1), ("cox",), ()])
def test_distinct_paths_are_distinct(path):
    other = ("simulate",)
    assert not np.array_equal(stream(1, *path).raw(8), stream(1, *other).raw(8))


def test_uniform_open_interval_and_shape():
    u = stream(3).uniform((100, 5))
    assert u.shape == (100, 5)
    assert np.all((u > 0) & (u < 1))


def test_normal_distribution():
    z = stream(5, "ks").normal(20000)
    assert stats.kstest(z, "norm").pvalue > 1e-3
    assert abs(z.mean()) < 0.05
