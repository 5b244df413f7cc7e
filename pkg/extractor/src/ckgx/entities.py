"""Entity table input: one ``id<TAB>text`` line per entity, ids contiguous
from 0. The same files the engine's split/train commands read and write."""

from .errors import ExtractorError


def read_entities(path: str) -> list[str]:
    texts: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise ExtractorError(f"{path}:{lineno}: expected id<TAB>text")
            try:
                eid = int(cols[0])
            except ValueError:
                raise ExtractorError(f"{path}:{lineno}: id {cols[0]!r} is not "
                                     f"an integer") from None
            if eid != len(texts):
                raise ExtractorError(f"{path}:{lineno}: ids must be "
                                     f"contiguous from 0")
            texts.append(cols[1])
    if not texts:
        raise ExtractorError(f"{path}: empty entity table")
    return texts
