import os
import sys

sys.path.insert(1, os.path.join(sys.path[0], ".."))

import time
from itertools import count

from heed.tools import lru_cache_with_expiry

calls = count()


@lru_cache_with_expiry(max_size=3, valid_for_seconds=1)
def sample_function(x, y):
    return next(calls)


def test_cache_basic_functionality():
    result1 = sample_function(1, 2)
    result2 = sample_function(1, 2)
    assert result2 == result1


def test_cache_expiry():
    result1 = sample_function(2, 3)
    time.sleep(1.1)
    result2 = sample_function(2, 3)
    assert result2 != result1


def test_cache_lru_eviction():
    sample_function.cache_clear()
    result1 = sample_function(1, 2)
    sample_function(2, 3)
    result3 = sample_function(3, 4)

    # the cache is full, (1, 2) is the oldest entry
    sample_function(4, 5)

    assert sample_function(1, 2) != result1
    assert sample_function(3, 4) == result3


def test_cache_lru_access_order():
    sample_function.cache_clear()
    result1 = sample_function(5, 6)
    result2 = sample_function(6, 7)
    sample_function(7, 8)

    assert sample_function(5, 6) == result1

    # (6, 7) is now the least recently used
    sample_function(8, 9)
    assert sample_function(6, 7) != result2


def test_cache_keyword_arguments():
    @lru_cache_with_expiry(max_size=2)
    def keyed(a, b=0):
        return next(calls)

    assert keyed(1, b=2) == keyed(1, b=2)
    assert keyed(1, b=2) != keyed(1, b=3)


if __name__ == "__main__":  # pragma: no cover
    from tests import run_tests

    run_tests()
