"""Knobs for bounded checking: enumeration bounds, unfolding depths and
blow-up guards.  One instance is threaded through the checkers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .kernel import IntSort, Sort, sort_domain


@dataclass(frozen=True)
class Bounds:
    sort_bound: int | None = None       # overrides the bound carried by sorts
    mu_depth: int = 16                  # recursion unfolding budget
    domain_cap: int = 10 ** 6           # max assignments in a validity check
    conjunct_budget: int = 10 ** 5      # interleaving size guard
    state_cap: int = 10 ** 4            # automata expansion guard
    repl_depth: int = 8                 # replication unfolding budget
    session_names: tuple[str, ...] = ("s0",)   # domain of session quantifiers
    input_sort: Sort = IntSort(4)       # domain of undeclared process inputs

    def domain(self, sort: Sort) -> list:
        return sort_domain(sort, self.sort_bound)

    def input_domain(self) -> list:
        return self.domain(self.input_sort)

    def with_(self, **kw) -> "Bounds":
        return replace(self, **kw)


DEFAULT_BOUNDS = Bounds()
