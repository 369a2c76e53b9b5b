"""Process-wide per-host token buckets.

Politeness toward a target is a property of the whole process, not of one
scan object: two scans running back to back (or interleaved) against the
same host must share a budget. Buckets are therefore keyed by (host, port)
in a module-level registry and live for the lifetime of the process.

Capacity is fixed at one token, so the burst allowance is exactly one
request beyond the steady rate.
"""

from __future__ import annotations

import threading
import time


class TokenBucket:
    """Classic token bucket. ``acquire`` blocks until a token is available."""

    def __init__(self, rate: float, capacity: float = 1.0):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate
        self.capacity = capacity
        self._tokens = capacity
        self._stamp = time.perf_counter()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.perf_counter()
                self._tokens = min(self.capacity, self._tokens + (now - self._stamp) * self.rate)
                self._stamp = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            time.sleep(wait)

    def try_acquire(self) -> bool:
        with self._lock:
            now = time.perf_counter()
            self._tokens = min(self.capacity, self._tokens + (now - self._stamp) * self.rate)
            self._stamp = now
            if self._tokens >= 1.0:
                self._tokens -= 1.0
                return True
            return False


_buckets: dict[tuple[str, int], TokenBucket] = {}
_registry_lock = threading.Lock()


def host_bucket(host: str, port: int, rate: float) -> TokenBucket:
    """The shared bucket for a host. The most recent rate wins, so a
    reconfigured scan adjusts the existing bucket instead of minting a
    fresh burst token."""
    key = (host.lower(), port)
    with _registry_lock:
        bucket = _buckets.get(key)
        if bucket is None:
            bucket = TokenBucket(rate)
            _buckets[key] = bucket
        else:
            bucket.rate = rate
        return bucket
