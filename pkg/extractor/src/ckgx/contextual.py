"""Contextual phrase embeddings from a pretrained transformer.

A phrase embedding is the mean of the final-layer hidden states over the
phrase's own wordpieces (special and padding positions excluded). The
model is used as published, in eval mode, with no fine-tuning; given a
pinned model version the output is deterministic.
"""

import numpy as np

from .errors import ExtractorError


class ContextualEncoder:
    def __init__(self, model_id: str, batch_size: int = 32):
        import torch  # local import keeps static-only extraction light
        from transformers import AutoModel, AutoTokenizer

        if batch_size < 1:
            raise ExtractorError("batch size must be positive")
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_id)
            self.model = AutoModel.from_pretrained(model_id)
        except Exception as exc:
            raise ExtractorError(f"cannot load contextual model "
                                 f"{model_id!r}: {exc}") from exc
        self.model.eval()
        self.batch_size = batch_size
        self.dim = int(self.model.config.hidden_size)
        self._torch = torch

    def encode(self, texts: list[str]) -> np.ndarray:
        """(len(texts), dim) float32 matrix, one row per input text.

        Texts are deduplicated before the forward pass, so equal strings
        get bit-identical rows and batch composition cannot leak between
        rows; row order always follows the input order.
        """
        torch = self._torch
        unique: list[str] = []
        index: dict[str, int] = {}
        for t in texts:
            if t not in index:
                index[t] = len(unique)
                unique.append(t)

        rows = np.empty((len(unique), self.dim), dtype=np.float32)
        with torch.no_grad():
            for start in range(0, len(unique), self.batch_size):
                chunk = unique[start:start + self.batch_size]
                enc = self.tokenizer(chunk, padding=True, truncation=True,
                                     return_tensors="pt",
                                     return_special_tokens_mask=True)
                special = enc.pop("special_tokens_mask")
                out = self.model(**enc).last_hidden_state
                keep = (enc["attention_mask"] * (1 - special)).unsqueeze(-1)
                counts = keep.sum(dim=1)
                # a text of only unknown characters still yields wordpieces,
                # but guard the division anyway
                counts = torch.clamp(counts, min=1)
                pooled = (out * keep).sum(dim=1) / counts
                rows[start:start + len(chunk)] = pooled.numpy().astype(np.float32)
        return rows[[index[t] for t in texts]]
