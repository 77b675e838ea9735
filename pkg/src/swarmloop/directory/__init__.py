from swarmloop.directory.jsonpath import compile_path, evaluate, query
from swarmloop.directory.registry import DirectoryEntry, ThingDirectory

__all__ = ["DirectoryEntry", "ThingDirectory", "compile_path", "evaluate", "query"]
