"""Dynamic partition of agents into groups.

The simulation's hot data structure: N agents, each in exactly one group.
Groups merge (two groups become one) and fragment (one group becomes
singletons) millions of times per run, and a uniformly random agent must be
drawn cheaply at every step.  A union-find structure cannot support
fragmentation (there is no de-union), so the partition is kept as a
per-agent group-handle array plus dense per-group member lists:

    * group lookup for an agent:    O(1)
    * merge of groups (s1, s2):     O(min(s1, s2))   (smaller list moves)
    * fragment of a group of s:     O(s)
    * uniform random agent:         O(1)

Group handles are plain ints.  Retired handles (after a merge or fragment)
are recycled; callers must never assume handles grow monotonically.
A Partition is single-writer: mutate it from one thread only.
"""

from __future__ import annotations

from collections import Counter


class Partition:
    """Mutable partition of agents 0..n-1 into groups of size >= 1."""

    __slots__ = ("n_agents", "_group_of", "_members", "_free_ids", "_next_id")

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"need at least one agent, got n={n}")
        self.n_agents = n
        self._group_of = list(range(n))
        self._members = {g: [g] for g in range(n)}
        self._free_ids: list[int] = []
        self._next_id = n

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        """Fresh partition with every agent alone in its own group."""
        return cls(n)

    # -- queries ---------------------------------------------------------

    @property
    def n_groups(self) -> int:
        return len(self._members)

    def group_ids(self):
        """Live group handles (iteration order is insertion order)."""
        return self._members.keys()

    def group_of(self, agent: int) -> tuple[int, int]:
        """Return (group handle, group size) for an agent."""
        g = self._group_of[agent]
        return g, len(self._members[g])

    def members(self, group: int) -> list[int]:
        """Member list of a live group.  Do not mutate the returned list."""
        return self._members[group]

    def size_of(self, group: int) -> int:
        return len(self._members[group])

    def pick_random_agent(self, rng) -> int:
        """Uniformly random agent id, O(1)."""
        return int(rng.integers(0, self.n_agents))

    def size_histogram(self) -> dict[int, int]:
        """Map group size -> number of groups of that size."""
        return dict(Counter(len(m) for m in self._members.values()))

    # -- mutations -------------------------------------------------------

    def _alloc_id(self) -> int:
        if self._free_ids:
            return self._free_ids.pop()
        g = self._next_id
        self._next_id += 1
        return g

    def merge(self, g1: int, g2: int) -> int:
        """Merge two distinct live groups; returns the handle of the union.

        The smaller member list is moved into the larger, so the cost is
        O(min(s1, s2)).  Both input handles are invalidated (one of them is
        recycled as the handle of the union).
        """
        if g1 == g2:
            raise ValueError("cannot merge a group with itself")
        m1 = self._members[g1]
        m2 = self._members[g2]
        if len(m1) < len(m2):
            g1, g2, m1, m2 = g2, g1, m2, m1
        group_of = self._group_of
        for a in m2:
            group_of[a] = g1
        m1.extend(m2)
        del self._members[g2]
        self._free_ids.append(g2)
        return g1

    def fragment(self, group: int) -> int:
        """Break a live group into singletons; returns its former size."""
        mem = self._members[group]
        s = len(mem)
        if s == 1:
            return 1
        del self._members[group]
        self._free_ids.append(group)
        group_of = self._group_of
        for a in mem:
            g = self._alloc_id()
            group_of[a] = g
            self._members[g] = [a]
        return s

    # -- debug -----------------------------------------------------------

    def check_invariants(self) -> None:
        """Full-scan consistency check (test/debug use; O(N))."""
        seen = 0
        for g, mem in self._members.items():
            if not mem:
                raise AssertionError(f"group {g} is empty")
            for a in mem:
                if self._group_of[a] != g:
                    raise AssertionError(f"agent {a} points to {self._group_of[a]}, listed in {g}")
            seen += len(mem)
        if seen != self.n_agents:
            raise AssertionError(f"groups cover {seen} agents, expected {self.n_agents}")
