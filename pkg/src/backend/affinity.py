"""
Worker thread affinity policies

cores:   worker i is pinned to every logical CPU of physical core i
threads: worker i is pinned to logical CPU i
none:    workers are left to the OS scheduler
"""

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Tuple

from src.errors import ParameterError
from src.utils import console

POLICIES = ('cores', 'threads', 'none')
SYSFS_CPU = Path("/sys/devices/system/cpu")


@dataclass
class AffinityDescriptor:
    """What was requested, what was applied, and the per-worker CPU masks."""

    requested: str
    applied: str
    cpu_sets: List[FrozenSet[int]] = field(default_factory=list)
    warning: bool = False
    message: str = ""

    def mask_for_worker(self, index: int) -> Optional[FrozenSet[int]]:
        if self.applied == 'none' or not self.cpu_sets:
            return None
        return self.cpu_sets[index % len(self.cpu_sets)]


def pinning_supported() -> bool:
    return hasattr(os, 'sched_setaffinity') and hasattr(os, 'sched_getaffinity')


def allowed_cpus() -> List[int]:
    if hasattr(os, 'sched_getaffinity'):
        return sorted(os.sched_getaffinity(0))
    return list(range(os.cpu_count() or 1))


def _read_int(path: Path) -> Optional[int]:
    try:
        return int(path.read_text().strip())
    except (OSError, ValueError):
        return None


def core_groups(cpus: Optional[List[int]] = None, sysfs: Path = SYSFS_CPU) -> Tuple[List[FrozenSet[int]], bool]:
    """
    Group logical CPUs by (package, core) from sysfs topology.

    Returns:
        Tuple of (groups ordered by lowest CPU id, whether topology was read)
    """
    cpus = allowed_cpus() if cpus is None else cpus
    groups: Dict[Tuple[int, int], List[int]] = {}
    for cpu in cpus:
        topology = sysfs / f"cpu{cpu}" / "topology"
        core_id = _read_int(topology / "core_id")
        package_id = _read_int(topology / "physical_package_id")
        if core_id is None:
            # Topology unavailable: treat each logical CPU as its own core
            return [frozenset([c]) for c in cpus], False
        groups.setdefault((package_id or 0, core_id), []).append(cpu)
    ordered = sorted(groups.values(), key=min)
    return [frozenset(g) for g in ordered], True


def set_affinity_policy(policy: str, n_workers: Optional[int] = None) -> AffinityDescriptor:
    """
    Resolve an affinity policy into per-worker CPU masks.

    Must be called before the worker pool is created; the pool applies
    mask_for_worker(i) in each worker's initializer. Degradation is reported
    through the descriptor, never raised.
    """
    policy = (policy or 'none').lower()
    if policy not in POLICIES:
        raise ParameterError(f"Affinity policy must be one of {', '.join(POLICIES)}, got '{policy}'")

    if policy == 'none':
        return AffinityDescriptor(requested=policy, applied='none')

    if not pinning_supported():
        message = f"thread pinning is not supported on this platform; '{policy}' affinity falls back to 'none'"
        console.warning(message)
        return AffinityDescriptor(requested=policy, applied='none', warning=True, message=message)

    cpus = allowed_cpus()
    warning = False
    message = ""
    if policy == 'cores':
        cpu_sets, from_topology = core_groups(cpus)
        if not from_topology:
            warning = True
            message = "CPU topology unavailable; pinning each worker to one logical CPU"
            console.warning(message)
    else:
        cpu_sets = [frozenset([c]) for c in cpus]

    if n_workers is not None and n_workers > len(cpu_sets):
        warning = True
        message = (f"{n_workers} workers exceed {len(cpu_sets)} '{policy}' slots; "
                   f"masks are reused round-robin")
        console.warning(message)

    return AffinityDescriptor(requested=policy, applied=policy, cpu_sets=cpu_sets,
                              warning=warning, message=message)


def pin_current_thread(cpus: FrozenSet[int]) -> bool:
    """Pin the calling thread (Linux: pid 0 addresses the calling thread)."""
    if not cpus or not pinning_supported():
        return False
    try:
        os.sched_setaffinity(0, cpus)
        return True
    except OSError as e:
        console.warning(f"Could not set CPU affinity {sorted(cpus)}: {e}")
        return False

