"""Augmentation policy search toolkit.

A desk-scale implementation of learned data-augmentation policies: a
bit-exact 8-bit image-operation kernel, the discretized policy model and
its text/JSON serializations, an LSTM+PPO policy-search controller with
random and evolutionary baselines, and reward evaluation through either a
built-in child classifier or an external JSONL worker.
"""

from .policy import (
    BatchContext,
    OperationKind,
    OperationSpec,
    Policy,
    SubPolicy,
    apply_policy,
    apply_sub_policy,
    load_builtin_policy,
    parse_policy,
    serialize_policy,
    search_space_size,
)
from .codec import decode_tokens, encode_policy, mutate
from .controller import (
    ControllerConfig,
    ControllerState,
    SearchLog,
    init_controller,
    ppo_update,
    run_search,
    sample,
)
from .evaluation import (
    ChildConfig,
    ExternalEvaluator,
    evaluate_policy,
    make_evaluator,
    top_k_concat,
)
from .datasets import LabeledDataset, load_cifar10_binary, reduce_dataset, synth_invariance
from .pipeline import AugmentPipeline, bench, render_grid, run_pipeline
from .rng import stream_rng

__version__ = "0.1.0"
