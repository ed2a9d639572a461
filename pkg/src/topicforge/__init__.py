"""Micro-topic discovery from query sessions, with taxonomy curation on top.

The pipeline stages live in their own modules:

- ingest: query normalization, sessionization, n-gram extraction
- bigraph: windowed n-gram/query co-occurrence graph
- simgraph: thresholded continuous-Jaccard similarity graph
- communities: ego-neighborhood Chinese Whispers clustering into micro-topics
- materialize: per-window query/pin/user lists for stable topics
- taxonomy: curator-managed style tree, classification, trigger logic
- evalharness: synthetic corpora with planted ground truth, recovery scoring
- service: read-mostly HTTP JSON API over a snapshot bundle
- cli: `forge` entry point tying the stages together
"""

__version__ = "0.1.0"
