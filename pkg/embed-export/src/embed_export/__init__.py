"""Export word-aligned embedding files from pretrained encoders and
word-vector sets, for consumption by probing pipelines."""

from embed_export.contextual import AlignmentError, ExportJob, export_contextual
from embed_export.conllu import ConlluError, read_sentences
from embed_export.formats import write_contextual, write_static
from embed_export.vectors import export_static, read_vec

__all__ = [
    "AlignmentError",
    "ConlluError",
    "ExportJob",
    "export_contextual",
    "export_static",
    "read_sentences",
    "read_vec",
    "write_contextual",
    "write_static",
]
