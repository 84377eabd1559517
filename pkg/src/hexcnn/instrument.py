"""Exact multiply-accumulate counters, incremented by the compute kernels."""

from __future__ import annotations

_macs = 0


def add_macs(n: int) -> None:
    global _macs
    _macs += int(n)


def mac_count() -> int:
    return _macs


class MacMeter:
    """Context manager capturing the MACs performed inside the block."""

    macs: int

    def __enter__(self) -> "MacMeter":
        self._start = mac_count()
        return self

    def __exit__(self, *exc) -> None:
        self.macs = mac_count() - self._start
