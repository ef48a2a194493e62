"""Semantic tree over a document corpus.

Leaves are documents; internal nodes carry generated summaries of their
children. The tree is treated as immutable once built; construction code
goes through :class:`TreeBuilder`.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator

NodeId = str

FORMAT_NAME = "semtree"
FORMAT_VERSION = 1
NUM_SUMMARY_LEVELS = 5


class TreeFormatError(ValueError):
    """Malformed serialized tree."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


@dataclass
class Node:
    id: NodeId
    text: str = ""
    children: list[NodeId] = field(default_factory=list)
    parent: NodeId | None = None
    doc_id: str | None = None
    summary_levels: list[str] | None = None

    @property
    def is_leaf(self) -> bool:
        return self.doc_id is not None

    def to_dict(self) -> dict:
        d: dict = {"id": self.id, "text": self.text, "parent": self.parent}
        if self.doc_id is not None:
            d["doc_id"] = self.doc_id
        else:
            d["children"] = list(self.children)
        if self.summary_levels is not None:
            d["summary_levels"] = list(self.summary_levels)
        return d


@dataclass
class Document:
    doc_id: str
    content: str
    source_id: str | None = None
    source_position: int | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.source_position is not None and self.source_id is None:
            raise ValueError(f"doc {self.doc_id!r}: source_position without source_id")


@dataclass
class Corpus:
    documents: list[Document]

    def __post_init__(self):
        seen = set()
        for d in self.documents:
            if d.doc_id in seen:
                raise ValueError(f"duplicate doc_id {d.doc_id!r}")
            seen.add(d.doc_id)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    @property
    def doc_ids(self) -> list[str]:
        return [d.doc_id for d in self.documents]


@dataclass
class SemanticTree:
    nodes: dict[NodeId, Node]
    root: NodeId
    max_branching: int

    def __post_init__(self):
        self._leaf_by_doc: dict[str, NodeId] | None = None

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, v: NodeId) -> bool:
        return v in self.nodes

    def node(self, v: NodeId) -> Node:
        try:
            return self.nodes[v]
        except KeyError:
            raise KeyError(f"unknown node id {v!r}") from None

    def children(self, v: NodeId) -> list[NodeId]:
        return self.node(v).children

    def parent(self, v: NodeId) -> NodeId | None:
        return self.node(v).parent

    def is_leaf(self, v: NodeId) -> bool:
        return self.node(v).is_leaf

    def text(self, v: NodeId) -> str:
        return self.node(v).text

    def leaves(self) -> list[NodeId]:
        return [v for v, n in self.nodes.items() if n.is_leaf]

    def internal_nodes(self) -> list[NodeId]:
        return [v for v, n in self.nodes.items() if not n.is_leaf]

    def leaf_for_doc(self, doc_id: str) -> NodeId:
        if self._leaf_by_doc is None:
            self._leaf_by_doc = {n.doc_id: v for v, n in self.nodes.items() if n.is_leaf}
        return self._leaf_by_doc[doc_id]

    def depth(self, v: NodeId) -> int:
        return len(path_to_root(self, v)) - 1

    def height(self) -> int:
        """Longest root-to-leaf edge count."""
        best = 0
        stack = [(self.root, 0)]
        while stack:
            v, d = stack.pop()
            best = max(best, d)
            stack.extend((c, d + 1) for c in self.nodes[v].children)
        return best

    def bfs(self) -> Iterator[NodeId]:
        queue = deque([self.root])
        while queue:
            v = queue.popleft()
            yield v
            queue.extend(self.nodes[v].children)


def leaf_descendants(tree: SemanticTree, v: NodeId) -> set[NodeId]:
    out = set()
    stack = [tree.node(v).id]
    while stack:
        u = stack.pop()
        n = tree.nodes[u]
        if n.is_leaf:
            out.add(u)
        else:
            stack.extend(n.children)
    return out


def path_to_root(tree: SemanticTree, v: NodeId) -> list[NodeId]:
    """Node ids from ``v`` up to and including the root."""
    path = [tree.node(v).id]
    seen = {v}
    while (p := tree.nodes[path[-1]].parent) is not None:
        if p in seen:
            raise ValueError(f"cycle through {p!r}")
        seen.add(p)
        path.append(p)
    return path


def validate_tree(tree: SemanticTree, corpus: Corpus | None = None) -> list[str]:
    """Return a list of invariant violations; empty means the tree is valid.

    Violations are reported as data. Each message names the offending node.
    """
    problems: list[str] = []
    nodes = tree.nodes
    M = tree.max_branching
    if M < 2:
        problems.append(f"max_branching {M} < 2")
    if tree.root not in nodes:
        return problems + [f"root {tree.root!r}: not present in node map"]

    claimed_by: dict[NodeId, list[NodeId]] = {}
    for vid, n in nodes.items():
        if n.id != vid:
            problems.append(f"node {vid!r}: id field {n.id!r} does not match key")
        if len(n.children) > M:
            problems.append(f"node {vid!r}: branching exceeded ({len(n.children)} > {M})")
        if len(set(n.children)) != len(n.children):
            problems.append(f"node {vid!r}: duplicate child entries")
        for c in dict.fromkeys(n.children):
            claimed_by.setdefault(c, []).append(vid)
        if n.is_leaf:
            if n.children:
                problems.append(f"node {vid!r}: leaf has children")
        else:
            if not n.children:
                problems.append(f"node {vid!r}: internal node without children or doc_id")
            if not n.text.strip() and vid != tree.root:
                problems.append(f"node {vid!r}: internal node has empty summary")
        if n.summary_levels is not None and len(n.summary_levels) != NUM_SUMMARY_LEVELS:
            problems.append(
                f"node {vid!r}: summary_levels has {len(n.summary_levels)} entries, "
                f"expected {NUM_SUMMARY_LEVELS}"
            )

    root = nodes[tree.root]
    if root.parent is not None:
        problems.append(f"root {tree.root!r}: has parent {root.parent!r}")
    if tree.root in claimed_by:
        problems.append(f"root {tree.root!r}: listed as child of {claimed_by[tree.root]}")

    for vid, n in nodes.items():
        claims = claimed_by.get(vid, [])
        if len(claims) > 1:
            problems.append(f"node {vid!r}: multiple parents {sorted(claims)}")
            continue
        if vid == tree.root:
            continue
        if n.parent is None:
            problems.append(f"node {vid!r}: second root (no parent)")
        elif n.parent not in nodes:
            problems.append(f"node {vid!r}: parent {n.parent!r} does not exist")
        elif claims != [n.parent]:
            problems.append(
                f"node {vid!r}: parent link {n.parent!r} inconsistent with child lists {claims}"
            )
    for c, parents in claimed_by.items():
        if c not in nodes:
            problems.append(f"node {parents[0]!r}: child {c!r} does not exist")

    reached = set()
    stack = [tree.root]
    while stack:
        u = stack.pop()
        if u in reached or u not in nodes:
            continue
        reached.add(u)
        stack.extend(nodes[u].children)
    for vid in nodes:
        if vid not in reached:
            problems.append(f"node {vid!r}: unreachable from root")

    docs: dict[str, NodeId] = {}
    for vid, n in nodes.items():
        if n.doc_id is None:
            continue
        if n.doc_id in docs:
            problems.append(f"node {vid!r}: doc_id {n.doc_id!r} already used by {docs[n.doc_id]!r}")
        docs[n.doc_id] = vid
    if corpus is not None:
        want = set(corpus.doc_ids)
        for d in sorted(want - docs.keys()):
            problems.append(f"document {d!r}: no leaf in tree")
        for d in sorted(docs.keys() - want):
            problems.append(f"node {docs[d]!r}: doc_id {d!r} not in corpus")
    return problems


class TreeBuilder:
    """Mutable scratch space used by the construction algorithms."""

    def __init__(self, max_branching: int, id_prefix: str = "n"):
        if max_branching < 2:
            raise ValueError("max_branching must be >= 2")
        self.max_branching = max_branching
        self.nodes: dict[NodeId, Node] = {}
        self._prefix = id_prefix
        self._next = 0

    def _new_id(self) -> NodeId:
        vid = f"{self._prefix}{self._next:06d}"
        self._next += 1
        return vid

    def add_leaf(self, doc: Document, summary_levels: list[str] | None = None) -> NodeId:
        vid = self._new_id()
        self.nodes[vid] = Node(vid, doc.content, doc_id=doc.doc_id, summary_levels=summary_levels)
        return vid

    def add_internal(self, text: str = "", children: Iterable[NodeId] = ()) -> NodeId:
        vid = self._new_id()
        self.nodes[vid] = Node(vid, text)
        for c in children:
            self.attach(vid, c)
        return vid

    def attach(self, parent: NodeId, child: NodeId) -> None:
        c = self.nodes[child]
        if c.parent is not None:
            self.detach(child)
        c.parent = parent
        self.nodes[parent].children.append(child)

    def detach(self, child: NodeId) -> None:
        c = self.nodes[child]
        if c.parent is not None:
            self.nodes[c.parent].children.remove(child)
            c.parent = None

    def build(self, root: NodeId) -> SemanticTree:
        return SemanticTree(dict(self.nodes), root, self.max_branching)


def serialize_tree(tree: SemanticTree) -> bytes:
    """Encode as one JSON document: a header plus nodes in BFS order."""
    order = list(tree.bfs())
    listed = set(order)
    order += [v for v in tree.nodes if v not in listed]
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "max_branching": tree.max_branching,
        "root": tree.root,
        "nodes": [tree.nodes[v].to_dict() for v in order],
    }
    return (json.dumps(doc, ensure_ascii=False, indent=1) + "\n").encode("utf-8")


def deserialize_tree(data: bytes) -> SemanticTree:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise TreeFormatError(f"invalid UTF-8: {e.reason}", e.start) from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise TreeFormatError(e.msg, len(text[: e.pos].encode("utf-8"))) from e
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise TreeFormatError("not a semtree document", 0)
    if doc.get("version") != FORMAT_VERSION:
        raise TreeFormatError(f"unsupported version {doc.get('version')!r}", 0)
    try:
        nodes = {}
        for rec in doc["nodes"]:
            n = Node(
                id=rec["id"],
                text=rec.get("text", ""),
                children=list(rec.get("children", [])),
                parent=rec.get("parent"),
                doc_id=rec.get("doc_id"),
                summary_levels=rec.get("summary_levels"),
            )
            if n.id in nodes:
                raise TreeFormatError(f"duplicate node id {n.id!r}")
            nodes[n.id] = n
        return SemanticTree(nodes, doc["root"], int(doc["max_branching"]))
    except (KeyError, TypeError) as e:
        raise TreeFormatError(f"missing or malformed field: {e}") from e


def save_tree(tree: SemanticTree, path) -> None:
    with open(path, "wb") as f:
        f.write(serialize_tree(tree))


def load_tree(path) -> SemanticTree:
    with open(path, "rb") as f:
        return deserialize_tree(f.read())
