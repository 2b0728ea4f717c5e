"""Exact big-integer accounting of pruning search-space sizes.

All values are Python integers; the JSON report carries them as decimal
strings so no precision is lost.
"""

from __future__ import annotations

from dataclasses import dataclass

from .arch import ArchitectureSpec, SubnetPartition


@dataclass(frozen=True)
class SpaceReport:
    whole_space: int
    divided_space: int
    reachable: int

    @property
    def magnitude_summary(self) -> str:
        return (f"whole 10^{len(str(self.whole_space)) - 1}, "
                f"divided 10^{len(str(self.divided_space)) - 1}, "
                f"reachable 10^{len(str(self.reachable)) - 1}")

    def to_json(self) -> dict:
        return {
            "whole_space": str(self.whole_space),
            "divided_space": str(self.divided_space),
            "reachable": str(self.reachable),
            "summary": self.magnitude_summary,
        }


def _subnet_choice_counts(arch: ArchitectureSpec, part: SubnetPartition) -> list[list[int]]:
    # each prunable position with original width k offers k retained-channel
    # choices (1..k); everything else contributes a factor of 1
    per_subnet: list[list[int]] = []
    for i in range(part.num_subnets):
        widths: list[int] = []
        for block in part.blocks_of(arch, i):
            widths.extend(block.prunable_widths)
        per_subnet.append(widths)
    return per_subnet


def whole_space(arch: ArchitectureSpec, part: SubnetPartition) -> int:
    """Joint choice count over every prunable position of the network."""
    total = 1
    for widths in _subnet_choice_counts(arch, part):
        for k in widths:
            total *= k
    return total


def divided_space(arch: ArchitectureSpec, part: SubnetPartition) -> int:
    """Sum over sub-networks of their independent choice counts."""
    total = 0
    for widths in _subnet_choice_counts(arch, part):
        product = 1
        for k in widths:
            product *= k
        total += product
    return total


def reachable_combinations(pop: int, offspring: int, iters: int, num_subnets: int) -> int:
    """Joint combinations of evaluated per-sub-network solutions:
    (pop + offspring*iters) ** num_subnets."""
    if min(pop, offspring, iters, num_subnets) < 1:
        raise ValueError("all inputs must be positive")
    return (pop + offspring * iters) ** num_subnets


def space_report(arch: ArchitectureSpec, part: SubnetPartition,
                 pop: int, offspring: int, iters: int) -> SpaceReport:
    return SpaceReport(
        whole_space(arch, part),
        divided_space(arch, part),
        reachable_combinations(pop, offspring, iters, part.num_subnets),
    )
