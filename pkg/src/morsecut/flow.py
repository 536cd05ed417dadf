"""Blocking-flow max-flow (Dinic) with min-cut extraction.

Capacities may be fractional; a relative tolerance guards augmentation so
integral inputs yield integral flows.
"""

from __future__ import annotations

EPS = 1e-12


class FlowNetwork:
    def __init__(self, n: int):
        self.n = n
        self.head: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[float] = []

    def add_arc(self, u: int, v: int, capacity: float) -> int:
        if capacity < 0:
            raise ValueError("negative capacity")
        i = len(self.to)
        self.to.append(v)
        self.cap.append(float(capacity))
        self.head[u].append(i)
        self.to.append(u)
        self.cap.append(0.0)
        self.head[v].append(i + 1)
        return i

    def _bfs_levels(self, s: int, t: int) -> list[int] | None:
        level = [-1] * self.n
        level[s] = 0
        queue = [s]
        qi = 0
        while qi < len(queue):
            u = queue[qi]
            qi += 1
            for i in self.head[u]:
                v = self.to[i]
                if self.cap[i] > EPS and level[v] < 0:
                    level[v] = level[u] + 1
                    queue.append(v)
        return level if level[t] >= 0 else None

    def _dfs_push(self, u: int, t: int, pushed: float,
                  level: list[int], it: list[int]) -> float:
        if u == t:
            return pushed
        while it[u] < len(self.head[u]):
            i = self.head[u][it[u]]
            v = self.to[i]
            if self.cap[i] > EPS and level[v] == level[u] + 1:
                got = self._dfs_push(v, t, min(pushed, self.cap[i]), level, it)
                if got > EPS:
                    self.cap[i] -= got
                    self.cap[i ^ 1] += got
                    return got
            it[u] += 1
        return 0.0

    def max_flow(self, s: int, t: int) -> float:
        total = 0.0
        while True:
            level = self._bfs_levels(s, t)
            if level is None:
                return total
            it = [0] * self.n
            while True:
                pushed = self._dfs_push(s, t, float("inf"), level, it)
                if pushed <= EPS:
                    break
                total += pushed

    def min_cut_source_side(self, s: int) -> set[int]:
        """Residual-reachable nodes after max_flow; the source side of a min cut."""
        seen = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for i in self.head[u]:
                v = self.to[i]
                if self.cap[i] > EPS and v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    def arc_flow(self, arc_id: int) -> float:
        return self.cap[arc_id ^ 1]


def max_flow(n: int, arcs: list[tuple[int, int, float]], source: int,
             sink: int) -> tuple[float, set[int]]:
    """Convenience wrapper: returns (flow value, source side of a min cut)."""
    net = FlowNetwork(n)
    for u, v, c in arcs:
        net.add_arc(u, v, c)
    value = net.max_flow(source, sink)
    return value, net.min_cut_source_side(source)
