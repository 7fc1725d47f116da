"""Tiny offline checkpoints shared across the exporter tests.

Each fixture saves a from-config model plus a hand-built byte-level
tokenizer into a session directory, so every test exercises the real
load_bundle -> export path without touching the network. The three model
families cover the three scoring heads: masked-LM, next-token, first
decoder step.
"""

import json

import pytest
import torch
from tokenizers import Tokenizer, decoders, models, pre_tokenizers
from transformers import (
    GPT2Config,
    GPT2LMHeadModel,
    PreTrainedTokenizerFast,
    RobertaConfig,
    RobertaForMaskedLM,
    T5Config,
    T5ForConditionalGeneration,
)

# Byte-level surface words; "Ġ" marks a leading space.
WORDS = [
    "Ġsports", "Ġgame", "Ġbusiness", "Ġmarket", "Ġriver", "Ġlake",
    "Ġmountain", "Ġmusic", "A", "Ġreport", "Ġ:", "Ġ.", "The", "Ġthe",
    "sports", "Ġnews", "Ġabout", "Ġteam", "Ġwon", "Ġstocks", "Ġrose",
    "Ġanswer", "Ġis", "Ġ?", "Ġ,", "Ġfestival",
]

SPECIALS = ["<s>", "<pad>", "</s>", "<unk>", "<mask>"]

VOCAB = {tok: i for i, tok in enumerate(SPECIALS + ["Ġ"] + WORDS)}
VOCAB_SIZE = len(VOCAB)  # 32

MODEL_MAX_LEN = 16  # small enough that a long sentence must truncate


def build_tokenizer(with_mask=True, extra_sentinel=False) -> PreTrainedTokenizerFast:
    vocab = dict(VOCAB)
    extras = []
    if extra_sentinel:
        vocab["<extra_id_0>"] = len(vocab)
        extras = ["<extra_id_0>"]
    core = Tokenizer(models.WordLevel(vocab, unk_token="<unk>"))
    core.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False)
    core.decoder = decoders.ByteLevel()
    kwargs = dict(
        tokenizer_object=core,
        bos_token="<s>", eos_token="</s>", unk_token="<unk>", pad_token="<pad>",
        cls_token="<s>", sep_token="</s>",
        model_max_length=MODEL_MAX_LEN,
        additional_special_tokens=extras,
    )
    if with_mask:
        kwargs["mask_token"] = "<mask>"
    return PreTrainedTokenizerFast(**kwargs)


@pytest.fixture(scope="session")
def mlm_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("tiny-mlm")
    config = RobertaConfig(
        vocab_size=VOCAB_SIZE, hidden_size=16, num_hidden_layers=3,
        num_attention_heads=2, intermediate_size=32,
        max_position_embeddings=40, pad_token_id=1, bos_token_id=0,
        eos_token_id=2,
    )
    torch.manual_seed(7)
    model = RobertaForMaskedLM(config)
    model.eval()
    model.save_pretrained(d)
    build_tokenizer().save_pretrained(d)
    return str(d)


@pytest.fixture(scope="session")
def causal_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("tiny-causal")
    config = GPT2Config(
        vocab_size=VOCAB_SIZE, n_positions=40, n_embd=16, n_layer=2,
        n_head=2, bos_token_id=0, eos_token_id=2,
    )
    torch.manual_seed(11)
    model = GPT2LMHeadModel(config)
    model.eval()
    model.save_pretrained(d)
    build_tokenizer().save_pretrained(d)
    return str(d)


@pytest.fixture(scope="session")
def seq2seq_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("tiny-seq2seq")
    config = T5Config(
        vocab_size=VOCAB_SIZE + 1,  # + <extra_id_0>
        d_model=16, d_kv=8, d_ff=32, num_layers=2, num_heads=2,
        decoder_start_token_id=1, pad_token_id=1, eos_token_id=2,
    )
    torch.manual_seed(13)
    model = T5ForConditionalGeneration(config)
    model.eval()
    model.save_pretrained(d)
    # No mask token: the sentinel fallback path should pick <extra_id_0>.
    build_tokenizer(with_mask=False, extra_sentinel=True).save_pretrained(d)
    return str(d)


@pytest.fixture
def write_dataset(tmp_path):
    """Factory writing JSON Lines dataset files into the test's tmp dir."""

    def _write(records, name="dataset.jsonl"):
        path = tmp_path / name
        with open(path, "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record) + "\n")
        return str(path)

    return _write
