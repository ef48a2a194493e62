"""
Two ways to organise a corpus into a tree
=========================================

The same synthetic corpus (four vocabularies mixed with shared filler) is
indexed bottom-up, by repeatedly clustering and summarising, and top-down,
by repeatedly asking for topic groups over keyword summaries. The offline
stand-ins answer the real prompts, so nothing here needs a model endpoint.
"""

from collections import Counter

from semtree.construction import BuildManifest, LlmSummarizer, build_bottom_up, build_top_down
from semtree.llm import as_client
from semtree.offline import OfflineKeywordWriter, OfflineSummaryWriter, OfflineTopicClusterer
from semtree.synthetic import topic_corpus
from semtree.tree import leaf_descendants, validate_tree

sc = topic_corpus(n_topics=4, docs_per_topic=25, seed=0)


def outline(tree, width=60):
    for v in tree.children(tree.root):
        topics = Counter(sc.topic_of[tree.nodes[x].doc_id] for x in leaf_descendants(tree, v))
        print(f"  {v}  {dict(sorted(topics.items()))}  {tree.text(v)[:width]!r}")


# %%
manifest = BuildManifest()
bu = build_bottom_up(sc.corpus, summarize=LlmSummarizer(as_client(OfflineSummaryWriter())), max_branching=8,
                     manifest=manifest)
print(f"bottom-up: height {bu.height()}, {len(bu)} nodes, {manifest.llm_calls} summaries, problems {validate_tree(bu)}")
outline(bu)

# %%
# The offline topic grouper is k-means over hashed keywords, so its groups are
# much coarser than a model's; expect mixed first-level nodes here.
manifest = BuildManifest()
td = build_top_down(sc.corpus, as_client(OfflineKeywordWriter()), as_client(OfflineTopicClusterer()),
                    max_branching=8, manifest=manifest)
print(f"top-down: height {td.height()}, {len(td)} nodes, {len(manifest.flags)} flags, problems {validate_tree(td)}")
outline(td)
