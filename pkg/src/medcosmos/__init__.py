"""medcosmos: entity-centric exploration of unstructured medical text.

Pipeline: ingest and segment documents, extract typed entities, compute
similarity/co-occurrence/topics, partition paragraph graphs into bounded
subgraphs, solve the star-map and document-space layouts, grow association
trees, and serve all of it to a browser client over HTTP.
"""

__version__ = "0.1.0"
