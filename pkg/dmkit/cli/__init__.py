# cli package
from dmkit.cli.documents import ResultDocument, load_document, read_csv, table_csv
from dmkit.cli.modelfile import ModelFile, load_model_file, parse_model
from dmkit.cli.main import cli, main

__all__ = [
    "ResultDocument", "load_document", "read_csv", "table_csv",
    "ModelFile", "load_model_file", "parse_model",
    "cli", "main",
]
