# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import random
import time
from collections import OrderedDict
from functools import wraps
from typing import Callable
from typing import Optional
from typing import Tuple
from typing import Type

import numpy
from cityhash import CityHash64

from heed.logging import get_logger

logger = get_logger()


def retry(
    max_tries: int = 3,
    backoff_seconds: float = 0,
    retry_exceptions: Tuple[Type[Exception], ...] = (Exception,),
    callback: Optional[Callable[[Exception, int], None]] = None,
) -> Callable:
    """
    Decorator to re-run a function when it raises one of `retry_exceptions`.

    Scene sampling uses this with no backoff; the wrapped function draws a fresh
    seed on each call so every attempt sees a different scene.

    Parameters:
        max_tries: int
            The maximum number of attempts.
        backoff_seconds: float
            Delay between attempts, zero for none.
        retry_exceptions: Tuple[Type[Exception]]
            Exception types that trigger another attempt.
        callback: Optional[Callable[[Exception, int], None]]
            Called after each failure with the exception and the attempt number.

    Returns:
        Callable: Wrapped function with retry logic.
    """

    def decorator_retry(func: Callable) -> Callable:
        @wraps(func)
        def wrapper_retry(*args, **kwargs):
            tries = 0
            while True:
                try:
                    return func(*args, **kwargs)
                except retry_exceptions as e:
                    tries += 1
                    if callback:
                        callback(e, tries)
                    if tries >= max_tries:
                        logger.error(
                            f"`{func.__name__}` failed with `{type(e).__name__}` after {tries} attempts."
                        )
                        raise e
                    logger.debug(
                        f"`{func.__name__}` failed with `{type(e).__name__}`, attempt {tries} of {max_tries}."
                    )
                    if backoff_seconds:
                        time.sleep(backoff_seconds)

        return wrapper_retry

    return decorator_retry


def lru_cache_with_expiry(
    func: Callable = None, *, max_size: int = 5, valid_for_seconds: float = float("inf")
) -> Callable:
    """
    LRU cache decorator with optional expiration time and a fixed size.

    Parameters:
        func: Callable, optional
            The function to be decorated.
        max_size: int, optional
            The maximum size of the cache.
        valid_for_seconds: float, optional
            Number of seconds after which an entry expires.
    """
    if func is None:
        return lambda f: lru_cache_with_expiry(
            f, max_size=max_size, valid_for_seconds=valid_for_seconds
        )

    cache: OrderedDict = OrderedDict()

    @wraps(func)
    def wrapper(*args, **kwargs):
        current_time = time.monotonic()
        key = (args, frozenset(kwargs.items()))

        for k in [k for k, (stamp, _) in cache.items() if current_time - stamp > valid_for_seconds]:
            del cache[k]

        if key in cache:
            cache.move_to_end(key)
            return cache[key][1]

        result = func(*args, **kwargs)
        cache[key] = (current_time, result)
        if len(cache) > max_size:
            cache.popitem(last=False)
        return result

    wrapper.cache_clear = cache.clear  # type:ignore
    return wrapper


def content_hash(data: bytes) -> str:
    """64-bit CityHash of `data` as 16 hex characters."""
    return f"{CityHash64(bytes(data)):016x}"


def derive_seed(*parts) -> int:
    """
    A 31-bit seed derived from a base seed and labels, so independent consumers
    (scene sampling, demo split, epsilon draws) get uncorrelated streams.
    """
    return CityHash64("/".join(str(p) for p in parts).encode()) & 0x7FFFFFFF


def seed_everything(seed: int):
    import torch

    random.seed(seed)
    numpy.random.seed(seed % (2**32))
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True, warn_only=True)
