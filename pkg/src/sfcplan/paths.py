"""k-shortest loop-free path candidates over the substrate, shared by all solvers."""
from __future__ import annotations

from itertools import islice, product
from typing import Iterator, Sequence

import networkx as nx

from .model import SubstrateNetwork


def _loop_free(net: SubstrateNetwork, link_ids: Sequence[int]) -> bool:
    seen: set[int] = set()
    for m in link_ids:
        if m in seen:
            return False
        rev = net.reverse_of.get(m)
        if rev is not None and rev in seen:
            return False
        seen.add(m)
    return True


class PathCatalog:
    """Caches delay-ordered simple-path candidates between server pairs.

    ``k`` bounds the candidates per ordered pair; ``k=None`` enumerates every
    simple path (toy instances only).
    """

    def __init__(self, net: SubstrateNetwork, k: int | None = 8):
        self.net = net
        self.k = k
        self._graph = nx.DiGraph()
        self._graph.add_nodes_from(net.servers)
        for l in sorted(net.links.values(), key=lambda l: l.id):
            # parallel directed links collapse to the cheapest one
            existing = self._graph.get_edge_data(l.tail, l.head)
            if existing is None or l.delay < existing["delay"]:
                self._graph.add_edge(l.tail, l.head, delay=l.delay, link=l.id)
        self._cache: dict[tuple[int, int], list[tuple[int, ...]]] = {}

    def _links_of(self, node_path: list[int]) -> tuple[int, ...]:
        return tuple(self._graph[u][v]["link"] for u, v in zip(node_path, node_path[1:]))

    def paths(self, src: int, dst: int) -> list[tuple[int, ...]]:
        """Candidate paths src -> dst as link-id tuples; [()] when src == dst."""
        if src == dst:
            return [()]
        key = (src, dst)
        if key not in self._cache:
            try:
                gen = nx.shortest_simple_paths(self._graph, src, dst, weight="delay")
                node_paths = list(gen) if self.k is None else list(islice(gen, self.k))
            except (nx.NetworkXNoPath, nx.NodeNotFound):
                node_paths = []
            paths = [self._links_of(p) for p in node_paths]
            paths.sort(key=lambda p: (self.net.path_delay(p), p))
            self._cache[key] = paths
        return self._cache[key]

    def shortest(self, src: int, dst: int) -> tuple[int, ...] | None:
        cands = self.paths(src, dst)
        return cands[0] if cands else None

    def walk_candidates(self, waypoints: Sequence[int],
                        limit: int | None = None) -> Iterator[tuple[int, ...]]:
        """Loop-free walks visiting ``waypoints`` in order, cheapest-delay first."""
        segment_options = []
        for a, b in zip(waypoints, waypoints[1:]):
            options = self.paths(a, b)
            if not options:
                return
            segment_options.append(options)
        combos = []
        for combo in product(*segment_options):
            walk = tuple(m for seg in combo for m in seg)
            if _loop_free(self.net, walk):
                combos.append(walk)
        combos = sorted(set(combos), key=lambda w: (self.net.path_delay(w), w))
        if limit is not None:
            combos = combos[:limit]
        yield from combos

    def detour_candidates(self, prev: int, backup_host: int, nxt: int,
                          limit: int | None = None) -> list[tuple[int, ...]]:
        """Non-empty loop-free detours prev -> backup host -> next."""
        out = set()
        for leg1, leg2 in product(self.paths(prev, backup_host),
                                  self.paths(backup_host, nxt)):
            detour = leg1 + leg2
            if detour and _loop_free(self.net, detour):
                out.add(detour)
        ordered = sorted(out, key=lambda d: (self.net.path_delay(d), d))
        if limit is not None:
            ordered = ordered[:limit]
        return ordered
