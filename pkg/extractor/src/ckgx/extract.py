"""End-to-end extraction: entity table in, CKGF feature file out."""

import numpy as np

from .ckgf import write_features
from .entities import read_entities
from .errors import ExtractorError
from .static_vectors import StaticVectors

MODES = ("both", "contextual", "static")


def extract(entities_path: str, out_path: str, mode: str = "both",
            contextual_model: str | None = None, vectors_path: str | None = None,
            batch_size: int = 32, lowercase: bool = True) -> dict:
    """Write one feature row per entity id; returns the manifest fields.

    ``both`` concatenates the contextual block and the static block, in
    that order, so its dim is the sum of the two parts and equals what
    concatenating the two single-mode outputs would give.
    """
    if mode not in MODES:
        raise ExtractorError(f"unknown mode {mode!r}; expected one of {MODES}")
    texts = read_entities(entities_path)
    for eid, text in enumerate(texts):
        if not text.strip():
            raise ExtractorError(f"entity {eid} has empty text")

    blocks: list[np.ndarray] = []
    info: dict = {"entities": entities_path, "mode": mode, "pooling": "mean",
                  "rows": len(texts)}

    if mode in ("both", "contextual"):
        if not contextual_model:
            raise ExtractorError("contextual extraction needs a model id")
        from .contextual import ContextualEncoder

        encoder = ContextualEncoder(contextual_model, batch_size=batch_size)
        ctx = encoder.encode(texts)
        blocks.append(ctx)
        info["contextual_model"] = contextual_model
        info["contextual_dim"] = encoder.dim

    if mode in ("both", "static"):
        if not vectors_path:
            raise ExtractorError("static extraction needs a word-vector file")
        table = StaticVectors.load(vectors_path)
        static = np.stack([table.phrase(t, lowercase=lowercase) for t in texts])
        blocks.append(static)
        info["static_vectors"] = vectors_path
        info["static_dim"] = table.dim

    matrix = blocks[0] if len(blocks) == 1 else np.concatenate(blocks, axis=1)
    info["dim"] = int(matrix.shape[1])
    manifest = "\n".join(f"{key}\t{value}" for key, value in info.items())
    write_features(out_path, matrix, manifest=manifest)
    return info
