"""Fine-tune a small sequence tagger on exported annotation corpora.

Consumes CoNLL-U files produced by the annotation pipeline and emits
predictions in the same format; the only interface between the two packages
is files.
"""

__version__ = "0.1.0"
