"""Loading and classifying pretrained models for export.

A loaded bundle pins down three things the export operations need: which
head produces the mask-position distribution (masked-LM, next-token, or
first decoder step), how long an input may get before the text slot must
be truncated, and how deep the encoder stack is for contextual export.
Inference always runs in deterministic evaluation mode; the exporter never
samples.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ModelError

# Model width/context/depth live under different config names per family.
_LIMIT_KEYS = ("max_position_embeddings", "n_positions")
_DEPTH_KEYS = ("num_hidden_layers", "n_layer", "num_layers")

# A huge default marks "tokenizer carries no real limit" in transformers.
_SANE_LIMIT = 1_000_000


@dataclass
class ModelBundle:
    model_id: str
    kind: str  # mlm | causal | seq2seq
    tokenizer: object
    model: object
    vocab_size: int  # len(tokenizer); tensor exports are sliced to this
    max_input_tokens: int | None
    depth: int

    @property
    def device(self):
        return next(self.model.parameters()).device

    def encoder_forward(self, input_ids, attention_mask=None):
        """Hidden states of the stack that contextualizes input tokens."""
        import torch

        target = self.model.get_encoder() if self.kind == "seq2seq" else self.model
        with torch.inference_mode():
            out = target(
                input_ids=input_ids.to(self.device),
                attention_mask=None if attention_mask is None else attention_mask.to(self.device),
                output_hidden_states=True,
            )
        return out.hidden_states


def _first_attr(config, names):
    for name in names:
        value = getattr(config, name, None)
        if isinstance(value, int) and value > 0:
            return value
    return None


def _detect_kind(config) -> str:
    if getattr(config, "is_encoder_decoder", False):
        return "seq2seq"
    for arch in getattr(config, "architectures", None) or ():
        if arch.endswith("ForMaskedLM"):
            return "mlm"
        if arch.endswith("ForCausalLM") or arch.endswith("LMHeadModel"):
            return "causal"
    return ""


def load_bundle(model_id, device=None) -> ModelBundle:
    """Load tokenizer + model and classify the scoring head.

    *device* moves the model (e.g. "cuda"); default stays on CPU. Raises
    ModelError when the identifier resolves to nothing loadable.
    """
    try:
        from transformers import (
            AutoConfig,
            AutoModelForCausalLM,
            AutoModelForMaskedLM,
            AutoModelForSeq2SeqLM,
            AutoTokenizer,
        )
    except ImportError as exc:  # pragma: no cover - environment guard
        raise ModelError(f"transformers is not installed ({exc})") from exc

    try:
        config = AutoConfig.from_pretrained(model_id)
        tokenizer = AutoTokenizer.from_pretrained(model_id)
    except Exception as exc:
        raise ModelError(f"cannot load model {model_id!r}: {exc}") from exc

    kind = _detect_kind(config)
    loaders = {
        "mlm": AutoModelForMaskedLM,
        "causal": AutoModelForCausalLM,
        "seq2seq": AutoModelForSeq2SeqLM,
    }
    try:
        if kind:
            model = loaders[kind].from_pretrained(model_id)
        else:
            # No architecture hint (bare config exports): try the masked-LM
            # head first, it is the method's home ground.
            try:
                model = AutoModelForMaskedLM.from_pretrained(model_id)
                kind = "mlm"
            except ValueError:
                model = AutoModelForCausalLM.from_pretrained(model_id)
                kind = "causal"
    except ModelError:
        raise
    except Exception as exc:
        raise ModelError(f"cannot load model {model_id!r}: {exc}") from exc

    model.eval()
    if device is not None:
        try:
            model.to(device)
        except (RuntimeError, ValueError) as exc:
            raise ModelError(f"cannot move model to device {device!r}: {exc}") from exc

    limit = getattr(tokenizer, "model_max_length", None)
    if not isinstance(limit, int) or not 0 < limit < _SANE_LIMIT:
        limit = _first_attr(config, _LIMIT_KEYS)
        if limit is not None and getattr(config, "model_type", "") == "roberta":
            # RoBERTa reserves two position slots for the padding offset.
            limit -= 2

    depth = _first_attr(config, _DEPTH_KEYS)
    if depth is None:
        raise ModelError(f"cannot determine layer count for model {model_id!r}")

    return ModelBundle(
        model_id=str(model_id),
        kind=kind,
        tokenizer=tokenizer,
        model=model,
        vocab_size=len(tokenizer),
        max_input_tokens=limit,
        depth=depth,
    )
