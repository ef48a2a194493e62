"""JSON-lines loaders for corpora, queries, relevance judgments and exclusions.

Record shapes (one JSON object per line, UTF-8)::

    corpus      {"doc_id", "content", "source_id"?, "source_position"?}
    queries     {"query_id", "text"}
    qrels       {"query_id", "doc_id", "gain"}
    exclusions  {"query_id", "excluded_doc_ids": [...]}

Datasets that use other field names can pass a field map (or a JSON file
holding one) keyed by record type, e.g. ``{"corpus": {"doc_id": "id"}}``.
Unknown fields are kept in each record's ``extra`` dict.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Iterator, Mapping

from .eval.bundle import EvalBundle, Qrels, Query
from .tree import Corpus, Document

logger = logging.getLogger(__name__)

CORPUS_FIELDS = ("doc_id", "content", "source_id", "source_position")
QUERY_FIELDS = ("query_id", "text")
QRELS_FIELDS = ("query_id", "doc_id", "gain")
EXCLUSION_FIELDS = ("query_id", "excluded_doc_ids")


class IngestError(ValueError):
    def __init__(self, message: str, path=None, line: int | None = None):
        where = f"{path}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.path = path
        self.line = line


FieldMap = Mapping[str, Mapping[str, str]]


def load_field_map(path) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _records(path, kind: str, fields: tuple[str, ...], field_map: FieldMap | None) -> Iterator[tuple[int, dict, dict]]:
    """Yield ``(line_no, canonical_fields, extra_fields)``."""
    mapping = dict((field_map or {}).get(kind, {}))
    source_names = {canon: mapping.get(canon, canon) for canon in fields}
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise IngestError(f"invalid JSON: {e.msg}", path, line_no) from None
            if not isinstance(rec, dict):
                raise IngestError("record is not an object", path, line_no)
            canon = {c: rec[src] for c, src in source_names.items() if src in rec}
            used = {src for c, src in source_names.items() if src in rec}
            extra = {k: v for k, v in rec.items() if k not in used}
            yield line_no, canon, extra


def _require(rec: dict, key: str, path, line_no: int) -> str:
    val = rec.get(key)
    if val is None or (isinstance(val, str) and not val.strip()):
        raise IngestError(f"missing or empty {key!r}", path, line_no)
    return str(val)


def load_corpus(path, field_map: FieldMap | None = None) -> Corpus:
    docs: list[Document] = []
    seen: dict[str, int] = {}
    for line_no, rec, extra in _records(path, "corpus", CORPUS_FIELDS, field_map):
        doc_id = _require(rec, "doc_id", path, line_no)
        if doc_id in seen:
            raise IngestError(f"duplicate doc_id {doc_id!r} (first seen on line {seen[doc_id]})", path, line_no)
        seen[doc_id] = line_no
        content = rec.get("content")
        if not isinstance(content, str):
            raise IngestError(f"doc {doc_id!r}: content must be a string", path, line_no)
        src = rec.get("source_id")
        pos = rec.get("source_position")
        if pos is not None and src is None:
            raise IngestError(f"doc {doc_id!r}: source_position without source_id", path, line_no)
        try:
            pos = None if pos is None else int(pos)
        except (TypeError, ValueError):
            raise IngestError(f"doc {doc_id!r}: source_position must be an integer", path, line_no) from None
        docs.append(Document(doc_id, content, None if src is None else str(src), pos, extra))
    corpus = Corpus(docs)
    info = corpus_summary(corpus)
    logger.info("loaded %d documents from %s (%d with source metadata)", info["documents"], path, info["with_source"])
    return corpus


def corpus_summary(corpus: Corpus) -> dict:
    with_src = sum(d.source_id is not None for d in corpus)
    with_pos = sum(d.source_position is not None for d in corpus)
    return {
        "documents": len(corpus),
        "with_source": with_src,
        "with_position": with_pos,
        "sources": len({d.source_id for d in corpus if d.source_id is not None}),
    }


def write_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for d in corpus:
            rec = {"doc_id": d.doc_id, "content": d.content}
            if d.source_id is not None:
                rec["source_id"] = d.source_id
            if d.source_position is not None:
                rec["source_position"] = d.source_position
            rec.update(d.extra)
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


def load_queries(path, field_map: FieldMap | None = None) -> list[Query]:
    out, seen = [], set()
    for line_no, rec, extra in _records(path, "queries", QUERY_FIELDS, field_map):
        qid = _require(rec, "query_id", path, line_no)
        if qid in seen:
            raise IngestError(f"duplicate query_id {qid!r}", path, line_no)
        seen.add(qid)
        text = rec.get("text")
        if not isinstance(text, str):
            raise IngestError(f"query {qid!r}: text must be a string", path, line_no)
        out.append(Query(qid, text, extra))
    return out


def load_qrels(path, field_map: FieldMap | None = None) -> Qrels:
    qrels: Qrels = {}
    for line_no, rec, _ in _records(path, "qrels", QRELS_FIELDS, field_map):
        qid = _require(rec, "query_id", path, line_no)
        did = _require(rec, "doc_id", path, line_no)
        try:
            gain = int(rec.get("gain", 1))
        except (TypeError, ValueError):
            raise IngestError(f"gain must be an integer", path, line_no) from None
        if gain < 0:
            raise IngestError(f"negative gain {gain}", path, line_no)
        qrels.setdefault(qid, {})[did] = gain
    return qrels


def load_exclusions(path, field_map: FieldMap | None = None) -> dict[str, set[str]]:
    out: dict[str, set[str]] = {}
    for line_no, rec, _ in _records(path, "exclusions", EXCLUSION_FIELDS, field_map):
        qid = _require(rec, "query_id", path, line_no)
        ids = rec.get("excluded_doc_ids", [])
        if not isinstance(ids, list):
            raise IngestError("excluded_doc_ids must be an array", path, line_no)
        out.setdefault(qid, set()).update(str(d) for d in ids)
    return out


def load_eval_bundle(
    query_path,
    qrels_path,
    exclusion_path=None,
    corpus: Corpus | None = None,
    field_map: FieldMap | None = None,
) -> EvalBundle:
    """Load a consistent query set; unknown doc references become warnings."""
    queries = load_queries(query_path, field_map)
    qrels = load_qrels(qrels_path, field_map)
    ids = {q.query_id for q in queries}
    unknown = sorted(set(qrels) - ids)
    if unknown:
        raise IngestError(f"qrels reference unknown query ids {unknown[:5]}", qrels_path)
    exclusions: dict[str, set[str]] = {q.query_id: set() for q in queries}
    if exclusion_path is not None and Path(exclusion_path).exists():
        for qid, docs in load_exclusions(exclusion_path, field_map).items():
            exclusions.setdefault(qid, set()).update(docs)
    warnings: list[str] = []
    if corpus is not None:
        known = set(corpus.doc_ids)
        for qid in sorted(qrels):
            missing = sorted(set(qrels[qid]) - known)
            if missing:
                warnings.append(f"qrels for {qid!r} reference {len(missing)} unknown docs, e.g. {missing[0]!r}")
        for qid in sorted(exclusions):
            missing = sorted(exclusions[qid] - known)
            if missing:
                warnings.append(f"exclusions for {qid!r} reference {len(missing)} unknown docs, e.g. {missing[0]!r}")
    for qid in sorted(set(exclusions) - ids):
        warnings.append(f"exclusions for unknown query {qid!r}")
    for w in warnings:
        logger.warning(w)
    return EvalBundle(queries, qrels, exclusions, warnings)


def write_jsonl(records, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")
