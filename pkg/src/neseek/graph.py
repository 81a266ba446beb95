"""Communication topology and the structural gates of Assumptions 5 and 6.

Agents are numbered 1..N.  An edge (j, i) means "agent i receives agent
j's output", i.e. j is a neighbor of i and y_j enters J_i.
"""

from collections import deque
from dataclasses import dataclass, field

from .errors import DimensionError, DomainError

__all__ = ["CommGraph", "neighbors", "check_acyclic", "check_connected"]


@dataclass(frozen=True)
class CommGraph:
    """Immutable communication graph on agents 1..N.

    ``edges`` holds ordered (source, sink) pairs; for an undirected graph
    the set must be symmetric (both orientations present).
    """

    agent_count: int
    directed: bool
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.agent_count < 1:
            raise DimensionError("agent_count must be positive")
        edges = frozenset((int(j), int(i)) for j, i in self.edges)
        object.__setattr__(self, "edges", edges)
        for j, i in edges:
            if j == i:
                raise DomainError(f"self-edge ({j},{i}) is not allowed")
            if not (1 <= j <= self.agent_count and 1 <= i <= self.agent_count):
                raise DomainError(f"edge ({j},{i}) endpoint out of range 1..{self.agent_count}")
        if not self.directed:
            for j, i in edges:
                if (i, j) not in edges:
                    raise DomainError(
                        f"undirected graph needs symmetric edges; ({i},{j}) missing"
                    )


def neighbors(g, i):
    """Neighbor set N_i = {j : (j, i) in edges}."""
    if not (1 <= i <= g.agent_count):
        raise DimensionError(f"agent index {i} out of range 1..{g.agent_count}")
    return {j for j, k in g.edges if k == i}


def check_acyclic(g):
    """Kahn's algorithm on a digraph.

    Returns ``(True, order)`` with a topological order (sources first;
    relabeling by it makes the closed-loop matrix block lower
    triangular), or ``(False, cycle)`` with one directed cycle as
    witness.

    Raises
    ------
    DomainError
        If called on an undirected graph.
    """
    if not g.directed:
        raise DomainError("acyclicity is a digraph property; graph is undirected")

    succ = {i: [] for i in range(1, g.agent_count + 1)}
    indeg = {i: 0 for i in range(1, g.agent_count + 1)}
    for j, i in sorted(g.edges):
        succ[j].append(i)
        indeg[i] += 1

    ready = sorted(i for i in indeg if indeg[i] == 0)
    order = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        inserted = False
        for nxt in succ[node]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                ready.append(nxt)
                inserted = True
        if inserted:
            ready.sort()

    if len(order) == g.agent_count:
        return True, order

    # strip leftover nodes with no successor among the leftovers; a cycle
    # always survives, and walking min-successors inside it must repeat
    core = {i for i in indeg if indeg[i] > 0}
    changed = True
    while changed:
        changed = False
        for node in sorted(core):
            if not any(n in core for n in succ[node]):
                core.remove(node)
                changed = True
    seen = {}
    path = []
    node = min(core)
    while node not in seen:
        seen[node] = len(path)
        path.append(node)
        node = min(n for n in succ[node] if n in core)
    cycle = path[seen[node]:] + [node]
    return False, cycle


def _skeleton_adjacency(g):
    adj = {i: set() for i in range(1, g.agent_count + 1)}
    for j, i in g.edges:
        adj[j].add(i)
        adj[i].add(j)
    return adj


def _reachable(start, adj):
    seen = {start}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for nxt in adj[node]:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def check_connected(g):
    """Classify connectivity.

    Returns one of ``"disconnected"``, ``"connected-undirected"``,
    ``"weakly-connected"``, ``"strongly-connected"``.  Undirected graphs
    only ever map to the first two; digraphs to the rest.
    """
    n = g.agent_count
    skeleton_ok = len(_reachable(1, _skeleton_adjacency(g))) == n

    if not g.directed:
        return "connected-undirected" if skeleton_ok else "disconnected"

    if not skeleton_ok:
        return "disconnected"
    fwd = {i: set() for i in range(1, n + 1)}
    bwd = {i: set() for i in range(1, n + 1)}
    for j, i in g.edges:
        fwd[j].add(i)
        bwd[i].add(j)
    if len(_reachable(1, fwd)) == n and len(_reachable(1, bwd)) == n:
        return "strongly-connected"
    return "weakly-connected"
