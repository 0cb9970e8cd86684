"""Toolkit for bootstrapping gold-standard annotations of historical corpora.

Pipeline: stratified sampling -> LLM annotation with agreement filtering ->
UD normalization and corpus building -> stratified splits and CoNLL-U export
-> human adjudication -> segmentation-aware evaluation.
"""

__version__ = "0.1.0"
