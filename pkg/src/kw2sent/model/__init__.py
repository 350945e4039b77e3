"""The keyword + template sentence generator."""
from .batch import Batch, EncodedExample, canonical, encode_example, encode_ids, pad_batch
from .checkpoint import MAGIC, Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from .generator import (
    EXCLUDED_IDS,
    DecodeTrace,
    DecodingError,
    EncodedKeywords,
    EncodedTemplate,
    Hypothesis,
    StepOutputs,
    TemplateGenerator,
    TraceStep,
)
from .params import ModelConfig, ModelParams, init_params, param_shapes

__all__ = [name for name in dir() if not name.startswith("_")]
