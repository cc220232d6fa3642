"""Finite directed multigraphs with explicit edge identities.

States and edges carry string ids externally; every structural query works on
dense integer indices (declaration order) and converts back at the boundary.
"""

from __future__ import annotations

import io
import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence


class GraphError(ValueError):
    """Raised for malformed or structurally invalid graphs."""


class GraphFormatError(GraphError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class Edge(NamedTuple):
    id: str
    src: str
    dst: str


@dataclass(frozen=True, eq=True)
class MultiGraph:
    """A finite directed multigraph; loops and parallel edges allowed.

    Instances are immutable.  Equality is literal (same ids, same order); use
    :func:`graph_isomorphic` for equality up to isomorphism.
    """

    states: tuple[str, ...]
    edges: tuple[Edge, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(str(s) for s in self.states))
        object.__setattr__(self, "edges", tuple(Edge(str(e[0]), str(e[1]), str(e[2])) for e in self.edges))
        if len(set(self.states)) != len(self.states):
            raise GraphError(f"duplicate state id in {self.states!r}")
        seen = set()
        known = set(self.states)
        for e in self.edges:
            if e.id in seen:
                raise GraphError(f"duplicate edge id {e.id!r}")
            seen.add(e.id)
            if e.src not in known or e.dst not in known:
                raise GraphError(f"edge {e.id!r} has an undeclared endpoint ({e.src!r} -> {e.dst!r})")

    # -- index views -------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def state_index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.states)}

    @cached_property
    def edge_index(self) -> dict[str, int]:
        return {e.id: i for i, e in enumerate(self.edges)}

    @cached_property
    def src(self) -> tuple[int, ...]:
        idx = self.state_index
        return tuple(idx[e.src] for e in self.edges)

    @cached_property
    def dst(self) -> tuple[int, ...]:
        idx = self.state_index
        return tuple(idx[e.dst] for e in self.edges)

    @cached_property
    def out_edges(self) -> tuple[tuple[int, ...], ...]:
        """Outgoing edge indices per state, in declaration order."""
        out: list[list[int]] = [[] for _ in self.states]
        for k, s in enumerate(self.src):
            out[s].append(k)
        return tuple(tuple(o) for o in out)

    @cached_property
    def followers(self) -> tuple[frozenset[int], ...]:
        dst = self.dst
        return tuple(frozenset(dst[k] for k in out) for out in self.out_edges)

    @cached_property
    def successors(self) -> tuple[tuple[int, ...], ...]:
        """Distinct follower indices per state, sorted."""
        return tuple(tuple(sorted(f)) for f in self.followers)

    @cached_property
    def predecessors(self) -> tuple[tuple[int, ...], ...]:
        pred: list[set[int]] = [set() for _ in self.states]
        for s, t in zip(self.src, self.dst):
            pred[t].add(s)
        return tuple(tuple(sorted(p)) for p in pred)

    @cached_property
    def count_matrix(self) -> tuple[tuple[int, ...], ...]:
        """``count_matrix[i][j] = |E_ij(G)|``."""
        rows = [[0] * self.n for _ in range(self.n)]
        for s, t in zip(self.src, self.dst):
            rows[s][t] += 1
        return tuple(tuple(r) for r in rows)

    @cached_property
    def _components(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(c) for c in _scc(self.n, self.successors))

    def out_degree(self, state: str) -> int:
        return len(self.out_edges[self.state_index[state]])

    def edges_from(self, state: str) -> list[Edge]:
        return [self.edges[k] for k in self.out_edges[self.state_index[state]]]

    def follower_ids(self, state: str) -> set[str]:
        return {self.states[j] for j in self.followers[self.state_index[state]]}

    def sinks(self) -> list[str]:
        return [self.states[i] for i, out in enumerate(self.out_edges) if not out]

    def is_sink_free(self) -> bool:
        return all(self.out_edges)

    def is_constant_degree(self) -> int | None:
        """Common out-degree, or None if out-degrees differ."""
        degrees = {len(o) for o in self.out_edges}
        return degrees.pop() if len(degrees) == 1 else None

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_counts(cls, counts: Sequence[Sequence[int]], names: Sequence[str] | None = None) -> "MultiGraph":
        """Build a graph from an edge-count matrix; edges get ids ``e0, e1, ...``."""
        n = len(counts)
        names = [str(i) for i in range(n)] if names is None else list(names)
        edges = []
        for i, row in enumerate(counts):
            for j, c in enumerate(row):
                for _ in range(int(c)):
                    edges.append(Edge(f"e{len(edges)}", names[i], names[j]))
        return cls(tuple(names), tuple(edges))

    def relabel(self, state_names: dict[str, str] | None = None, edge_names: dict[str, str] | None = None) -> "MultiGraph":
        sn = state_names or {}
        en = edge_names or {}
        return MultiGraph(
            tuple(sn.get(s, s) for s in self.states),
            tuple(Edge(en.get(e.id, e.id), sn.get(e.src, e.src), sn.get(e.dst, e.dst)) for e in self.edges),
        )

    def __repr__(self) -> str:
        return f"MultiGraph(n={self.n}, m={self.m}, states={list(self.states)!r})"


# ---------------------------------------------------------------------------
# Serialization

def _parse_text(text: str) -> MultiGraph:
    states: list[str] = []
    edges: list[Edge] = []
    in_edges = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0]
        if head == "states":
            states.extend(tokens[1:])
            in_edges = False
            continue
        if head == "edges":
            in_edges = True
            tokens = tokens[1:]
            if not tokens:
                continue
        if not in_edges:
            raise GraphFormatError(f"unexpected content {line!r} before an 'edges' section", lineno)
        if len(tokens) != 3:
            raise GraphFormatError(f"edge line needs '<edge-id> <src> <dst>', got {line!r}", lineno)
        edges.append(Edge(*tokens))
    if not states:
        raise GraphFormatError("no 'states' line found")
    try:
        return MultiGraph(tuple(states), tuple(edges))
    except GraphFormatError:
        raise
    except GraphError as exc:
        raise GraphFormatError(str(exc)) from None


def graph_from_json(obj: dict) -> MultiGraph:
    try:
        states = obj["states"]
        edges = obj.get("edges", [])
    except (KeyError, TypeError, AttributeError):
        raise GraphFormatError("JSON graph needs a 'states' list and an 'edges' list") from None
    parsed = []
    for item in edges:
        if isinstance(item, dict):
            item = (item.get("id"), item.get("src"), item.get("dst"))
        if len(item) != 3 or any(x is None for x in item):
            raise GraphFormatError(f"malformed JSON edge {item!r}")
        parsed.append(Edge(*map(str, item)))
    try:
        return MultiGraph(tuple(map(str, states)), tuple(parsed))
    except GraphError as exc:
        raise GraphFormatError(str(exc)) from None


def load_graph(source, allow_sinks: bool = False) -> MultiGraph:
    """Parse a graph from text or JSON (bytes, str, or a readable stream).

    Raises :class:`GraphFormatError` on syntax problems, duplicate ids,
    dangling endpoints, and (unless ``allow_sinks``) states without
    outgoing edges.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    stripped = source.lstrip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(source)
        except json.JSONDecodeError as exc:
            raise GraphFormatError(f"invalid JSON: {exc.msg}", exc.lineno) from None
        graph = graph_from_json(obj)
    else:
        graph = _parse_text(source)
    if not allow_sinks and not graph.is_sink_free():
        raise GraphFormatError(f"sink state(s) {graph.sinks()!r}; pass allow_sinks to accept them")
    return graph


def dump_graph(G: MultiGraph) -> str:
    out = io.StringIO()
    out.write("states " + " ".join(G.states) + "\n")
    out.write("edges\n")
    for e in G.edges:
        out.write(f"{e.id} {e.src} {e.dst}\n")
    return out.getvalue()


def graph_to_json(G: MultiGraph) -> dict:
    return {"states": list(G.states), "edges": [list(e) for e in G.edges]}


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(G: MultiGraph, labels: dict[str, str] | None = None, name: str = "G") -> str:
    """DOT text, one DOT edge per multigraph edge labelled by its id.

    ``labels`` maps edge ids to an extra colour label (e.g. the image edge
    under a resolver), rendered as ``id / label``.
    """
    lines = [f"digraph {_dot_quote(name)} {{"]
    for s in G.states:
        lines.append(f"  {_dot_quote(s)};")
    for e in G.edges:
        label = e.id if not labels or e.id not in labels else f"{e.id} / {labels[e.id]}"
        lines.append(f"  {_dot_quote(e.src)} -> {_dot_quote(e.dst)} [label={_dot_quote(label)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Connectivity

def _scc(n: int, succ: Sequence[Sequence[int]]) -> list[list[int]]:
    # iterative Tarjan
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, i = work.pop()
            if i == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            recurse = False
            nbrs = succ[v]
            while i < len(nbrs):
                w = nbrs[i]
                i += 1
                if index[w] == -1:
                    work.append((v, i))
                    work.append((w, 0))
                    recurse = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    comps.sort(key=lambda c: c[0])
    return comps


def scc_indices(G: MultiGraph) -> list[list[int]]:
    return [list(c) for c in G._components]


def strong_components(G: MultiGraph) -> list[tuple[str, ...]]:
    """Strong components as state-id tuples, ordered by first state."""
    return [tuple(G.states[i] for i in comp) for comp in scc_indices(G)]


def is_strongly_connected(G: MultiGraph) -> bool:
    return G.n > 0 and len(G._components) == 1


def reachable_from(G: MultiGraph, start: Iterable[int]) -> set[int]:
    seen = set(start)
    queue = deque(seen)
    succ = G.successors
    while queue:
        v = queue.popleft()
        for w in succ[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def condensation(G: MultiGraph) -> MultiGraph:
    """Acyclic graph of strong components, one edge per crossing ordered pair."""
    comps = scc_indices(G)
    comp_of = [0] * G.n
    for c, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = c
    names = ["{" + ",".join(G.states[v] for v in comp) + "}" for comp in comps]
    pairs = sorted({(comp_of[s], comp_of[t]) for s, t in zip(G.src, G.dst) if comp_of[s] != comp_of[t]})
    edges = tuple(Edge(f"c{a}>c{b}", names[a], names[b]) for a, b in pairs)
    return MultiGraph(tuple(names), edges)


def _principal_index_sets(G: MultiGraph) -> list[list[int]]:
    comps = scc_indices(G)
    comp_of = [0] * G.n
    for c, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = c
    leaves_comp = [False] * len(comps)
    for s, t in zip(G.src, G.dst):
        if comp_of[s] != comp_of[t]:
            leaves_comp[comp_of[s]] = True
    return [comp for c, comp in enumerate(comps) if not leaves_comp[c]]


def principal_components(G: MultiGraph) -> list[tuple[str, ...]]:
    """Strong components that are sinks of the condensation."""
    return [tuple(G.states[i] for i in comp) for comp in _principal_index_sets(G)]


def induced_principal_subgraph(G: MultiGraph, S: Iterable[str]) -> MultiGraph:
    """Subgraph on a follower-closed state set, keeping every outgoing edge."""
    keep = set(S)
    unknown = keep - set(G.states)
    if unknown:
        raise GraphError(f"unknown states {sorted(unknown)!r}")
    for s in keep:
        missing = G.follower_ids(s) - keep
        if missing:
            raise GraphError(f"state set is not follower-closed: {s!r} reaches {sorted(missing)!r}")
    return MultiGraph(
        tuple(s for s in G.states if s in keep),
        tuple(e for e in G.edges if e.src in keep),
    )


def induced_subgraph(G: MultiGraph, S: Iterable[str]) -> MultiGraph:
    keep = set(S)
    return MultiGraph(
        tuple(s for s in G.states if s in keep),
        tuple(e for e in G.edges if e.src in keep and e.dst in keep),
    )


def period(G: MultiGraph) -> int:
    """gcd of cycle lengths of a strongly connected graph (BFS level method)."""
    if not is_strongly_connected(G):
        raise GraphError("period is defined only for strongly connected graphs")
    level = [-1] * G.n
    level[0] = 0
    queue = deque([0])
    succ = G.successors
    while queue:
        v = queue.popleft()
        for w in succ[v]:
            if level[w] == -1:
                level[w] = level[v] + 1
                queue.append(w)
    g = 0
    for s, t in zip(G.src, G.dst):
        g = math.gcd(g, level[s] + 1 - level[t])
    return g


# ---------------------------------------------------------------------------
# Higher edge graphs

def _paths(G: MultiGraph, length: int) -> list[tuple[int, ...]]:
    paths: list[tuple[int, ...]] = [(k,) for k in range(G.m)]
    for _ in range(length - 1):
        paths = [p + (k,) for p in paths for k in G.out_edges[G.dst[p[-1]]]]
    return paths


def higher_edge_graph(G: MultiGraph, k: int) -> MultiGraph:
    """The k-th higher edge graph: states are (k-1)-paths, edges are k-paths."""
    if k < 1:
        raise GraphError("k must be positive")
    if k == 1:
        return G
    if not G.is_sink_free():
        raise GraphError("higher edge graphs need a sink-free graph")
    ids = [e.id for e in G.edges]

    def name(path):
        return ".".join(ids[x] for x in path)

    states = [name(p) for p in _paths(G, k - 1)]
    edges = [Edge(name(p), name(p[:-1]), name(p[1:])) for p in _paths(G, k)]
    return MultiGraph(tuple(states), tuple(edges))


# ---------------------------------------------------------------------------
# Isomorphism (desk scale)

class Isomorphism(NamedTuple):
    states: dict[str, str]
    edges: dict[str, str]


def _refine_colours(G: MultiGraph, H: MultiGraph) -> tuple[list[int], list[int]]:
    """Joint colour refinement on the disjoint union using in/out counts."""
    graphs = (G, H)
    colours = [[0] * g.n for g in graphs]
    n_classes = 1
    while True:
        sigs = []
        for g, col in zip(graphs, colours):
            cm = g.count_matrix
            sig = []
            for i in range(g.n):
                out = sorted((col[j], cm[i][j]) for j in range(g.n) if cm[i][j])
                inc = sorted((col[j], cm[j][i]) for j in range(g.n) if cm[j][i])
                sig.append((col[i], tuple(out), tuple(inc)))
            sigs.append(sig)
        palette = {s: r for r, s in enumerate(sorted(set(sigs[0]) | set(sigs[1])))}
        colours = [[palette[s] for s in sig] for sig in sigs]
        if len(palette) == n_classes:
            return colours[0], colours[1]
        n_classes = len(palette)


def graph_isomorphic(G: MultiGraph, H: MultiGraph, max_states: int = 12) -> Isomorphism | None:
    """Find an isomorphism G -> H by backtracking, or return None.

    Exponential in the worst case; refuses inputs above ``max_states``.
    """
    if G.n > max_states or H.n > max_states:
        raise GraphError(f"graph_isomorphic is limited to {max_states} states")
    if G.n != H.n or G.m != H.m:
        return None
    cg, ch = _refine_colours(G, H)
    if sorted(cg) != sorted(ch):
        return None
    A, B = G.count_matrix, H.count_matrix
    order = sorted(range(G.n), key=lambda i: (sum(1 for c in cg if c == cg[i]), cg[i], i))
    image = [-1] * G.n
    used = [False] * H.n

    def consistent(pos: int, cand: int) -> bool:
        i = order[pos]
        if A[i][i] != B[cand][cand]:
            return False
        for q in range(pos):
            j = order[q]
            if A[i][j] != B[cand][image[j]] or A[j][i] != B[image[j]][cand]:
                return False
        return True

    def search(pos: int) -> bool:
        if pos == G.n:
            return True
        i = order[pos]
        for cand in range(H.n):
            if not used[cand] and ch[cand] == cg[i] and consistent(pos, cand):
                image[i] = cand
                used[cand] = True
                if search(pos + 1):
                    return True
                used[cand] = False
        image[i] = -1
        return False

    if not search(0):
        return None
    state_map = {G.states[i]: H.states[image[i]] for i in range(G.n)}
    buckets: dict[tuple[int, int], list[int]] = {}
    for k, (s, t) in enumerate(zip(H.src, H.dst)):
        buckets.setdefault((s, t), []).append(k)
    cursor: dict[tuple[int, int], int] = {}
    edge_map = {}
    for k, (s, t) in enumerate(zip(G.src, G.dst)):
        key = (image[s], image[t])
        pos = cursor.get(key, 0)
        cursor[key] = pos + 1
        edge_map[G.edges[k].id] = H.edges[buckets[key][pos]].id
    iso = Isomorphism(state_map, edge_map)
    _verify_isomorphism(G, H, iso)
    return iso


def _verify_isomorphism(G: MultiGraph, H: MultiGraph, iso: Isomorphism) -> None:
    if len(set(iso.states.values())) != H.n or len(set(iso.edges.values())) != H.m:
        raise AssertionError("isomorphism witness is not bijective")
    h_edges = {e.id: e for e in H.edges}
    for e in G.edges:
        f = h_edges[iso.edges[e.id]]
        if f.src != iso.states[e.src] or f.dst != iso.states[e.dst]:
            raise AssertionError(f"isomorphism witness breaks edge {e.id!r}")


def count_paths(G: MultiGraph, length: int) -> int:
    """Number of edge paths of the given length (dynamic programming)."""
    ways = [1] * G.n  # paths of length 0 ending at each state
    for _ in range(length):
        nxt = [0] * G.n
        for s, t in zip(G.src, G.dst):
            nxt[t] += ways[s]
        ways = nxt
    return sum(ways)


__all__ = [
    "Edge", "MultiGraph", "GraphError", "GraphFormatError", "Isomorphism",
    "load_graph", "dump_graph", "graph_to_json", "graph_from_json", "to_dot",
    "strong_components", "is_strongly_connected", "condensation", "principal_components",
    "induced_principal_subgraph", "induced_subgraph", "period", "higher_edge_graph",
    "graph_isomorphic", "count_paths", "reachable_from", "scc_indices",
]
