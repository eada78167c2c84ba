"""
Multi-document passage graph for one (head, tail) entity pair
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Set, Tuple

import networkx as nx

from models.errors import GraphNodeError, InvalidQueryError
from services.corpus_store import CorpusHandle

logger = logging.getLogger(__name__)

ROLE_HEAD = "head"
ROLE_TAIL = "tail"
ROLE_OTHER = "other"


@dataclass
class PassageGraph:
    """Entity-labeled multigraph over passages of head- and tail-bearing documents.

    Edges are keyed by the shared entity id, so parallel edges between two
    passages always carry distinct labels. The graph is not modified after
    build_graph returns.
    """
    query_pair: Tuple[str, str]
    graph: nx.MultiGraph
    head_set: Set[str] = field(default_factory=set)
    tail_set: Set[str] = field(default_factory=set)
    doc_ids: List[str] = field(default_factory=list)
    adjacency: Dict[str, List[Tuple[str, str]]] = field(default_factory=dict)

    @property
    def nodes(self) -> Set[str]:
        return set(self.graph.nodes)

    def roles(self, passage_id: str) -> Set[str]:
        roles = set()
        if passage_id in self.head_set:
            roles.add(ROLE_HEAD)
        if passage_id in self.tail_set:
            roles.add(ROLE_TAIL)
        return roles or {ROLE_OTHER}

    def doc_of(self, passage_id: str) -> str:
        return self.graph.nodes[passage_id]['doc_id']

    def edge_count(self) -> int:
        return self.graph.number_of_edges()


def build_graph(corpus: CorpusHandle, head: str, tail: str, doc_cap: int = 50) -> PassageGraph:
    """Build the passage graph over the capped head- and tail-bearing documents"""
    if head == tail:
        raise InvalidQueryError(f"head and tail must differ (both '{head}')")
    for entity_id in (head, tail):
        if not corpus.has_entity(entity_id):
            raise InvalidQueryError(f"entity '{entity_id}' is not in the corpus")

    doc_ids = sorted(set(corpus.documents_with_entity(head, doc_cap))
                     | set(corpus.documents_with_entity(tail, doc_cap)))

    graph = nx.MultiGraph()
    entity_passages: Dict[str, List[str]] = {}
    head_set: Set[str] = set()
    tail_set: Set[str] = set()

    for doc_id in doc_ids:
        for passage in corpus.document(doc_id).passages:
            entities = passage.entity_ids()
            graph.add_node(passage.id, doc_id=doc_id)
            if head in entities:
                head_set.add(passage.id)
            if tail in entities:
                tail_set.add(passage.id)
            for entity_id in entities:
                entity_passages.setdefault(entity_id, []).append(passage.id)

    # Head/tail-labeled edges are built too; the path miner refuses them as bridges
    for entity_id in sorted(entity_passages):
        for p, q in combinations(sorted(entity_passages[entity_id]), 2):
            graph.add_edge(p, q, key=entity_id)

    adjacency = {
        node: sorted((neighbor, key) for _, neighbor, key in graph.edges(node, keys=True))
        for node in graph.nodes
    }

    logger.info(f"Graph for ({head}, {tail}): {len(doc_ids)} documents, {graph.number_of_nodes()} passages, "
                f"{graph.number_of_edges()} edges, {len(head_set)} head / {len(tail_set)} tail passages")

    return PassageGraph(query_pair=(head, tail), graph=graph, head_set=head_set,
                        tail_set=tail_set, doc_ids=doc_ids, adjacency=adjacency)


def neighbors(graph: PassageGraph, passage_id: str) -> List[Tuple[str, str]]:
    """(neighbor passage id, entity id) pairs sorted by neighbor then entity"""
    try:
        return list(graph.adjacency[passage_id])
    except KeyError:
        raise GraphNodeError(f"passage '{passage_id}' is not a node of the graph for {graph.query_pair}")


def dump_graph(graph: PassageGraph) -> List[str]:
    """Edge list, one undirected edge per line, as `p \\t q \\t entity` with p < q"""
    edges = sorted((min(u, v), max(u, v), key) for u, v, key in graph.graph.edges(keys=True))
    return [f"{p}\t{q}\t{entity_id}" for p, q, entity_id in edges]
