"""The four export operations: vocabulary, embedding table, per-example
mask logits, and per-token contextual states.

Outputs land in one directory per model, with fixed names the engine's run
configs can point at:

    vocab.jsonl               + vocab.export.json
    embeddings.npt            + embeddings.export.json
    <stem>.logits.npt         + <stem>.logits.manifest.jsonl + <stem>.logits.export.json
    contextual.layer<N>.npt   + contextual.export.json

<stem> is the dataset filename up to its first dot ("ag_news.test.jsonl"
exports as "ag_news.logits.npt"). Every operation finishes by writing an
export manifest with a sha256 per emitted file.
"""

from __future__ import annotations

import logging
import os

import numpy as np

from .datasets import read_examples
from .errors import DataError, ModelError, UsageError
from .formats import write_export_manifest, write_row_manifest, write_tensor, write_vocab
from .modeling import ModelBundle
from .templates import Slot, Template, parse_template, render, render_prefix

logger = logging.getLogger(__name__)


def export_vocab(bundle: ModelBundle, out_dir) -> dict:
    """Dump the tokenizer's id->token table as JSON Lines.

    Tokens are written in surface form (the tokenizer's own decoding of the
    single token), so a byte-level BPE entry like "Ġsports" lands as
    " sports" and keyword lookup can distinguish it from bare "sports".
    """
    tokenizer = bundle.tokenizer
    special_ids = set(tokenizer.all_special_ids)
    entries = []
    for i in range(bundle.vocab_size):
        raw = tokenizer.convert_ids_to_tokens(i)
        if raw is None:
            raise ModelError(f"tokenizer has no token for id {i}")
        surface = tokenizer.convert_tokens_to_string([raw])
        if not isinstance(surface, str) or surface == "":
            surface = raw
        entries.append((i, surface, i in special_ids))
    vocab_path = os.path.join(out_dir, "vocab.jsonl")
    write_vocab(vocab_path, entries)
    manifest_path = os.path.join(out_dir, "vocab.export.json")
    write_export_manifest(
        manifest_path, bundle.model_id, "vocab", [vocab_path],
        extra={"entries": len(entries)},
    )
    logger.info("exported %d vocab entries to %s", len(entries), vocab_path)
    return {"vocab": vocab_path, "manifest": manifest_path, "entries": len(entries)}


def export_embeddings(bundle: ModelBundle, out_dir) -> dict:
    """Dump the model's input token-embedding table, one row per vocab id."""
    import torch

    weight = bundle.model.get_input_embeddings().weight
    matrix = weight.detach().cpu().to(dtype=torch.float32).numpy()
    if matrix.shape[0] < bundle.vocab_size:
        raise DataError(
            f"embedding table has {matrix.shape[0]} rows but the tokenizer "
            f"defines {bundle.vocab_size} tokens"
        )
    trimmed = matrix.shape[0] - bundle.vocab_size
    matrix = matrix[: bundle.vocab_size].copy()
    tensor_path = os.path.join(out_dir, "embeddings.npt")
    write_tensor(tensor_path, matrix)
    manifest_path = os.path.join(out_dir, "embeddings.export.json")
    extra = {
        "rows": int(matrix.shape[0]),
        "dim": int(matrix.shape[1]),
        # recorded so consumers can tell this is the INPUT table, not a
        # tied output projection
        "embedding_source": "input",
    }
    if trimmed:
        extra["padded_rows_dropped"] = trimmed
    write_export_manifest(manifest_path, bundle.model_id, "embeddings", [tensor_path], extra=extra)
    logger.info("exported embeddings %s to %s", matrix.shape, tensor_path)
    return {"embeddings": tensor_path, "manifest": manifest_path, "shape": matrix.shape}


# --- logits ----------------------------------------------------------------


def _mask_text(bundle: ModelBundle) -> str:
    tokenizer = bundle.tokenizer
    if bundle.kind == "mlm":
        if tokenizer.mask_token is None:
            raise ModelError(f"model {bundle.model_id!r} is masked-LM but its tokenizer has no mask token")
        return tokenizer.mask_token
    if bundle.kind == "seq2seq":
        if tokenizer.mask_token is not None:
            return tokenizer.mask_token
        if "<extra_id_0>" in tokenizer.get_vocab():
            return "<extra_id_0>"
        return ""
    return ""  # causal: generation starts at the slot, no marker needed


def _encode_ids(tokenizer, text: str) -> list[int]:
    return tokenizer(text, add_special_tokens=True)["input_ids"]


def _model_input(bundle: ModelBundle, template: Template, payloads: dict[str, str], mask_text: str) -> str:
    if bundle.kind == "causal":
        return render_prefix(template, payloads)
    return render(template, payloads, mask_text)


def _fit_payloads(bundle, template, example, mask_text) -> tuple[dict[str, str], bool]:
    """Shrink text payloads until the rendered input fits the model context.

    Only payload tokens are dropped, from the right, last slot first; the
    template's literal text and the mask are never touched. Returns the
    fitted payloads and whether truncation happened.
    """
    tokenizer = bundle.tokenizer
    limit = bundle.max_input_tokens
    payloads = dict(example.payloads)
    truncated = False
    while limit is not None:
        n = len(_encode_ids(tokenizer, _model_input(bundle, template, payloads, mask_text)))
        over = n - limit
        if over <= 0:
            break
        slot = next(
            (name for name in reversed(template.text_slots) if payloads[name]),
            None,
        )
        if slot is None:
            raise DataError(
                f"example {example.id!r}: template literals alone exceed the "
                f"{limit}-token model context"
            )
        toks = tokenizer(payloads[slot], add_special_tokens=False)["input_ids"]
        keep = max(0, len(toks) - over)
        payloads[slot] = tokenizer.decode(toks[:keep], skip_special_tokens=False) if keep else ""
        truncated = True
    if truncated:
        logger.warning(
            "example %s: text truncated to fit the %d-token context", example.id, limit
        )
    return payloads, truncated


def _mask_position(input_ids, mask_id, example_id) -> int:
    positions = [i for i, t in enumerate(input_ids) if t == mask_id]
    if len(positions) != 1:
        raise DataError(
            f"example {example_id!r}: rendered prompt contains "
            f"{len(positions)} mask tokens, expected exactly one"
        )
    return positions[0]


def _score_batch_mlm(bundle, prompts, example_ids) -> np.ndarray:
    import torch

    tokenizer = bundle.tokenizer
    mask_id = tokenizer.mask_token_id
    enc = tokenizer(prompts, add_special_tokens=True, padding=len(prompts) > 1, return_tensors="pt")
    # Positions are found in the padded rows the model actually sees, so
    # they stay valid whichever side the tokenizer pads on.
    positions = [
        _mask_position(row, mask_id, ex_id)
        for row, ex_id in zip(enc["input_ids"].tolist(), example_ids)
    ]
    attention = enc.get("attention_mask")
    with torch.inference_mode():
        out = bundle.model(
            input_ids=enc["input_ids"].to(bundle.device),
            attention_mask=None if attention is None else attention.to(bundle.device),
        )
    logits = out.logits
    rows = [logits[i, positions[i], : bundle.vocab_size] for i in range(len(prompts))]
    return torch.stack(rows).float().cpu().numpy().copy()


def _score_batch_causal(bundle, prompts, example_ids) -> np.ndarray:
    # One forward per example: batching would need padding, and absolute
    # position ids under padding shift the next-token distribution.
    import torch

    tokenizer = bundle.tokenizer
    rows = []
    for prompt, ex_id in zip(prompts, example_ids):
        ids = _encode_ids(tokenizer, prompt)
        if not ids:
            if tokenizer.bos_token_id is None:
                raise DataError(f"example {ex_id!r}: empty prompt and the tokenizer has no BOS token")
            ids = [tokenizer.bos_token_id]
        with torch.inference_mode():
            out = bundle.model(input_ids=torch.tensor([ids], device=bundle.device))
        rows.append(out.logits[0, -1, : bundle.vocab_size])
    return torch.stack(rows).float().cpu().numpy().copy()


def _score_batch_seq2seq(bundle, prompts, example_ids) -> np.ndarray:
    import torch

    tokenizer = bundle.tokenizer
    start = getattr(bundle.model.config, "decoder_start_token_id", None)
    if start is None:
        raise ModelError(f"model {bundle.model_id!r} defines no decoder start token")
    enc = tokenizer(prompts, add_special_tokens=True, padding=len(prompts) > 1, return_tensors="pt")
    decoder_ids = torch.full((len(prompts), 1), start, dtype=torch.long, device=bundle.device)
    attention = enc.get("attention_mask")
    with torch.inference_mode():
        out = bundle.model(
            input_ids=enc["input_ids"].to(bundle.device),
            attention_mask=None if attention is None else attention.to(bundle.device),
            decoder_input_ids=decoder_ids,
        )
    return out.logits[:, 0, : bundle.vocab_size].float().cpu().numpy().copy()


_SCORERS = {
    "mlm": _score_batch_mlm,
    "causal": _score_batch_causal,
    "seq2seq": _score_batch_seq2seq,
}


def export_logits(bundle: ModelBundle, dataset_path, template_source, out_dir, batch_size=16) -> dict:
    """Score every dataset record once and dump the mask-position logits.

    Masked-LM models contribute the distribution at the mask token;
    autoregressive and encoder-decoder models contribute their first
    generated token's distribution. Rows follow dataset order.
    """
    if batch_size < 1:
        raise UsageError(f"batch size must be >= 1, got {batch_size}")
    template = parse_template(template_source)
    examples = read_examples(dataset_path)
    mask_text = _mask_text(bundle)
    if bundle.kind == "causal":
        mask_at = next(i for i, s in enumerate(template.segments) if s is Slot.MASK)
        if mask_at + 1 < len(template.segments):
            logger.info("causal model: template content after {mask} is ignored for scoring")

    tokenizer = bundle.tokenizer
    if tokenizer.pad_token_id is None and bundle.kind != "causal":
        batch_size = 1  # cannot pad, score one at a time

    scorer = _SCORERS[bundle.kind]
    rows: list[np.ndarray] = []
    example_ids: list[str] = []
    n_truncated = 0
    prompts: list[str] = []
    pending_ids: list[str] = []

    def flush():
        if prompts:
            rows.append(scorer(bundle, prompts, pending_ids))
            prompts.clear()
            pending_ids.clear()

    for example in examples:
        if template.is_pair != example.is_pair:
            want = "a sentence pair" if template.is_pair else "a single sentence"
            raise DataError(f"example {example.id!r}: template takes {want}")
        payloads, truncated = _fit_payloads(bundle, template, example, mask_text)
        n_truncated += truncated
        prompts.append(_model_input(bundle, template, payloads, mask_text))
        pending_ids.append(example.id)
        example_ids.append(example.id)
        if len(prompts) >= batch_size:
            flush()
    flush()

    if rows:
        matrix = np.concatenate(rows, axis=0)
    else:
        logger.warning("dataset %s is empty; exporting a 0-row batch", dataset_path)
        matrix = np.zeros((0, bundle.vocab_size), dtype=np.float32)

    stem = os.path.basename(os.fspath(dataset_path)).split(".")[0] or "dataset"
    tensor_path = os.path.join(out_dir, f"{stem}.logits.npt")
    rows_path = os.path.join(out_dir, f"{stem}.logits.manifest.jsonl")
    write_tensor(tensor_path, matrix)
    write_row_manifest(rows_path, example_ids)
    manifest_path = os.path.join(out_dir, f"{stem}.logits.export.json")
    write_export_manifest(
        manifest_path, bundle.model_id, "logits", [tensor_path, rows_path],
        extra={
            "template": template.source,
            "dataset": os.fspath(dataset_path),
            "rows": len(example_ids),
            "columns": bundle.vocab_size,
            "head": bundle.kind,
            "truncated_examples": n_truncated,
        },
    )
    logger.info("exported logits %s to %s", matrix.shape, tensor_path)
    return {
        "logits": tensor_path,
        "rows": rows_path,
        "manifest": manifest_path,
        "shape": matrix.shape,
        "truncated_examples": n_truncated,
    }


def export_contextual(bundle: ModelBundle, layer_index, out_dir, batch_size=64) -> dict:
    """Contextual state of every vocabulary token at one layer.

    Each token is encoded as a standalone single-token sequence (the
    simplest well-defined context); layer 0 is the embedding output,
    layer N the last block.
    """
    import torch

    if batch_size < 1:
        raise UsageError(f"batch size must be >= 1, got {batch_size}")
    if not isinstance(layer_index, int) or not 0 <= layer_index <= bundle.depth:
        raise UsageError(
            f"layer index {layer_index} out of range 0..{bundle.depth} "
            f"for model {bundle.model_id!r}"
        )
    chunks = []
    for start in range(0, bundle.vocab_size, batch_size):
        ids = torch.arange(start, min(start + batch_size, bundle.vocab_size)).unsqueeze(1)
        hidden = bundle.encoder_forward(ids)
        if layer_index >= len(hidden):
            raise ModelError(
                f"model reports depth {bundle.depth} but produced "
                f"{len(hidden) - 1} layers of hidden states"
            )
        chunks.append(hidden[layer_index][:, 0, :].float().cpu().numpy().copy())
    matrix = np.concatenate(chunks, axis=0)
    tensor_path = os.path.join(out_dir, f"contextual.layer{layer_index}.npt")
    write_tensor(tensor_path, matrix)
    manifest_path = os.path.join(out_dir, "contextual.export.json")
    write_export_manifest(
        manifest_path, bundle.model_id, "contextual", [tensor_path],
        extra={
            "layer_index": layer_index,
            "rows": int(matrix.shape[0]),
            "dim": int(matrix.shape[1]),
        },
    )
    logger.info("exported contextual layer %d %s to %s", layer_index, matrix.shape, tensor_path)
    return {"contextual": tensor_path, "manifest": manifest_path, "shape": matrix.shape}
