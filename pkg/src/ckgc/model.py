"""Model bundle: encoder plus decoder parameters and their configs.

Keeps the trainable tensors in one place so the trainer, evaluator, and
checkpoint writer agree on parameter names. Serialization round-trips
through the binary checkpoint container; configs and table sizes travel in
the JSON manifest so a saved model can be reloaded without the original
command line.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import checkpoint as ckpt
from . import decoder as dec
from . import encoder as enc
from .config import DecoderConfig, EncoderConfig
from .errors import DataError


@dataclass
class Model:
    encoder_params: list[enc.GrGcnLayerParams]
    decoder_params: dec.DecoderParams
    encoder_config: EncoderConfig
    decoder_config: DecoderConfig
    num_relations: int  # original relations, before inverses

    @property
    def num_relation_ids(self) -> int:
        return 2 * self.num_relations + 1

    def named_parameters(self) -> dict[str, ad.Tensor]:
        out = enc.named_params(self.encoder_params)
        out.update(self.decoder_params.named())
        return out

    def arrays(self) -> dict[str, np.ndarray]:
        out = {name: t.value for name, t in self.named_parameters().items()}
        out["dec.perm_head"] = self.decoder_params.perm_head
        out["dec.perm_rel"] = self.decoder_params.perm_rel
        return out


def init_model(encoder_config: EncoderConfig, decoder_config: DecoderConfig,
               num_relations: int, seed: int) -> Model:
    if encoder_config.input_dim <= 0:
        raise DataError("encoder input_dim must be set from the feature file before init")
    ss = np.random.SeedSequence(seed)
    enc_seed, dec_seed = ss.spawn(2)
    num_relation_ids = 2 * num_relations + 1
    encoder_params = enc.init_params(encoder_config, num_relation_ids, enc_seed)
    decoder_params = dec.init_params(decoder_config, num_relation_ids,
                                     encoder_config.hidden_dim, dec_seed)
    return Model(encoder_params, decoder_params, encoder_config, decoder_config, num_relations)


def _config_manifest(model: Model) -> dict:
    e, d = model.encoder_config, model.decoder_config
    return {
        "encoder": {
            "layers": e.layers, "hidden_dim": e.hidden_dim, "input_dim": e.input_dim,
            "activation": e.activation, "gate": e.gate, "mode": e.mode,
        },
        "decoder": {
            "kernels": d.kernels, "kernel_width": d.kernel_width,
            "dropout_input": d.dropout_input, "dropout_features": d.dropout_features,
            "dropout_proj": d.dropout_proj, "shuffle": d.shuffle,
        },
        "num_relations": model.num_relations,
    }


def save_model(path, model: Model, opt=None, extra_manifest: dict | None = None) -> None:
    manifest = _config_manifest(model)
    if extra_manifest:
        manifest.update(extra_manifest)
    ckpt.save_checkpoint(path, model.arrays(), opt=opt, manifest=manifest)


def load_model(path):
    """Returns (model, optimizer_state_or_None, manifest)."""
    arrays, opt, manifest = ckpt.load_checkpoint(path)
    if manifest is None or "encoder" not in manifest or "decoder" not in manifest:
        raise DataError(f"{path}: checkpoint has no model manifest")
    e, d = manifest["encoder"], manifest["decoder"]
    encoder_config = EncoderConfig(
        layers=e["layers"], hidden_dim=e["hidden_dim"], input_dim=e["input_dim"],
        activation=e["activation"], gate=e["gate"], mode=e["mode"],
    )
    decoder_config = DecoderConfig(
        kernels=d["kernels"], kernel_width=d["kernel_width"],
        dropout_input=d["dropout_input"], dropout_features=d["dropout_features"],
        dropout_proj=d["dropout_proj"], shuffle=d["shuffle"],
    )
    num_relations = manifest["num_relations"]

    def take(name):
        if name not in arrays:
            raise DataError(f"{path}: checkpoint missing array {name}")
        return arrays[name]

    encoder_params = []
    for i in range(encoder_config.layers):
        p = f"enc{i}."
        encoder_params.append(enc.GrGcnLayerParams(
            w_self=ad.tensor(take(p + "w_self"), True, p + "w_self"),
            w_nbr=ad.tensor(take(p + "w_nbr"), True, p + "w_nbr"),
            rel_weight=ad.tensor(take(p + "rel_weight"), True, p + "rel_weight"),
            w_gate=ad.tensor(take(p + "w_gate"), True, p + "w_gate"),
            b_gate=ad.tensor(take(p + "b_gate"), True, p + "b_gate"),
        ))
    decoder_params = dec.DecoderParams(
        rel_table=ad.tensor(take("dec.rel_table"), True, "dec.rel_table"),
        kernels=ad.tensor(take("dec.kernels"), True, "dec.kernels"),
        proj=ad.tensor(take("dec.proj"), True, "dec.proj"),
        perm_head=np.asarray(take("dec.perm_head"), dtype=np.int64),
        perm_rel=np.asarray(take("dec.perm_rel"), dtype=np.int64),
    )
    model = Model(encoder_params, decoder_params, encoder_config, decoder_config, num_relations)
    return model, opt, manifest
