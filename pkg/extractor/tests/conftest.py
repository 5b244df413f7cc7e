import os

import pytest

VOCAB = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "red", "blue", "apple", "car",
         "##s", "sky"]


@pytest.fixture(scope="session")
def tiny_bert(tmp_path_factory):
    """A real but tiny saved transformer + wordpiece tokenizer, built
    locally so no test touches the network."""
    import torch
    from tokenizers import Tokenizer
    from tokenizers.models import WordPiece
    from tokenizers.normalizers import BertNormalizer
    from tokenizers.pre_tokenizers import BertPreTokenizer
    from tokenizers.processors import TemplateProcessing
    from transformers import BertConfig, BertModel, PreTrainedTokenizerFast

    root = tmp_path_factory.mktemp("tinybert")
    vocab_path = os.path.join(root, "vocab.txt")
    with open(vocab_path, "w") as fh:
        fh.write("\n".join(VOCAB) + "\n")

    backend = Tokenizer(WordPiece.from_file(vocab_path, unk_token="[UNK]"))
    backend.normalizer = BertNormalizer(lowercase=True)
    backend.pre_tokenizer = BertPreTokenizer()
    backend.post_processor = TemplateProcessing(
        single="[CLS] $A [SEP]", pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", VOCAB.index("[CLS]")),
                        ("[SEP]", VOCAB.index("[SEP]"))])
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=backend, unk_token="[UNK]", pad_token="[PAD]",
        cls_token="[CLS]", sep_token="[SEP]")

    config = BertConfig(vocab_size=len(VOCAB), hidden_size=8,
                        num_hidden_layers=1, num_attention_heads=2,
                        intermediate_size=16, max_position_embeddings=32)
    torch.manual_seed(0)
    model = BertModel(config)
    model_dir = os.path.join(root, "model")
    model.save_pretrained(model_dir)
    tokenizer.save_pretrained(model_dir)
    return model_dir


@pytest.fixture(scope="session")
def tiny_vec(tmp_path_factory):
    """Five 5-dim word vectors plus two n-gram entries for the OOV path."""
    rows = [
        ("red", "1 0 0 0 0"),
        ("blue", "0 1 0 0 0"),
        ("apple", "0 0 1 0 0"),
        ("car", "0 0 0 1 0"),
        ("sky", "0 0 0 0 1"),
        ("<zz", "2 0 0 0 2"),
        ("zz>", "0 2 0 0 0"),
    ]
    path = os.path.join(tmp_path_factory.mktemp("vec"), "tiny.vec")
    with open(path, "w") as fh:
        fh.write(f"{len(rows)} 5\n")
        for word, vals in rows:
            fh.write(f"{word} {vals}\n")
    return path


@pytest.fixture()
def entities_file(tmp_path):
    texts = ["red apple", "blue car", "sky", "red apple"]
    path = os.path.join(tmp_path, "entities.tsv")
    with open(path, "w") as fh:
        for i, t in enumerate(texts):
            fh.write(f"{i}\t{t}\n")
    return path, texts
