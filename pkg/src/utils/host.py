"""
Host introspection: core counts and a descriptor string for datasets and bundles.
"""

import os
import platform
from typing import Optional

import psutil


def logical_cores() -> int:
    """Logical CPUs usable by this process."""
    if hasattr(os, 'sched_getaffinity'):
        return max(1, len(os.sched_getaffinity(0)))
    return max(1, os.cpu_count() or 1)


def physical_cores() -> int:
    """Physical cores, falling back to the logical count when unknown."""
    count: Optional[int] = psutil.cpu_count(logical=False)
    if not count:
        return logical_cores()
    return min(count, logical_cores())


def host_descriptor() -> str:
    """Free-form host identity recorded alongside timings."""
    cpu = platform.processor() or platform.machine()
    return (f"{platform.node()}|{platform.system()}-{platform.release()}|{cpu}|"
            f"physical={physical_cores()}|logical={logical_cores()}")
