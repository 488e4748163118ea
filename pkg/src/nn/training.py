"""
Mini-batch Adam training of the FSG network
"""

from dataclasses import dataclass, field

import numpy as np

from src.dataset.augment import AugmentParams
from src.dataset.pipeline import check_mode, condition_sample, prepare_example
from src.nn.functional import mse_pixelwise
from src.nn.optim import AdamState, adam_step
from src.perception.preprocess import NormalizationStats, compute_stats
from src.utils.errors import DataError, ParameterError, SkipSample


@dataclass
class TrainConfig:
    """Options of one training run; epochs, batch size, learning rate and seed come from NetworkConfig"""

    mode: str = "fsg"
    micro_batch: int = 8
    augment: bool = True
    augment_params: AugmentParams = field(default_factory=AugmentParams)
    preprocess: object = None
    stats: NormalizationStats = None

    def __post_init__(self):
        check_mode(self.mode)
        if self.micro_batch < 1:
            raise ParameterError(f"Micro-batch size must be >= 1, got {self.micro_batch}")


@dataclass
class TrainReport:
    """Per-epoch losses; epoch 0 holds the losses before the first update"""

    mode: str
    n_train: int
    n_eval: int
    history: list = field(default_factory=list)
    best_epoch: int = 0
    best_eval_loss: float = float("inf")
    skipped: int = 0
    stats: NormalizationStats = None

    @property
    def initial_train_loss(self):
        return self.history[0]["train_loss"]

    @property
    def final_train_loss(self):
        return self.history[-1]["train_loss"]

    def to_dict(self):
        return {
            "mode": self.mode,
            "n_train": self.n_train,
            "n_eval": self.n_eval,
            "history": list(self.history),
            "best_epoch": self.best_epoch,
            "best_eval_loss": self.best_eval_loss,
            "skipped_samples": self.skipped,
            "normalization": self.stats.to_dict() if self.stats else None,
        }


def _chunks(items, size):
    for start in range(0, len(items), size):
        yield items[start : start + size]


def evaluate_loss(net, examples, micro_batch):
    """Mean pixel-wise MSE over pre-built (input, target) pairs"""
    if not examples:
        return float("nan")
    total = 0.0
    count = 0
    for chunk in _chunks(examples, micro_batch):
        inputs = np.stack([x for x, _ in chunk])
        targets = np.stack([y for _, y in chunk])
        out, _ = net.forward_tensor(inputs)
        loss, _ = mse_pixelwise(out, targets)
        total += loss * targets.size
        count += targets.size
    return total / count


def _batch_gradients(net, examples, micro_batch):
    """Gradient of the full-batch mean loss, accumulated over micro-batches"""
    batch_elements = sum(y.size for _, y in examples)
    grads = None
    for chunk in _chunks(examples, micro_batch):
        inputs = np.stack([x for x, _ in chunk])
        targets = np.stack([y for _, y in chunk])
        out, cache = net.forward_tensor(inputs, keep_cache=True)
        _, grad = mse_pixelwise(out, targets)
        grad = grad * (targets.size / batch_elements)
        chunk_grads = net.backward(cache, grad)
        grads = chunk_grads if grads is None else [g + c for g, c in zip(grads, chunk_grads)]
    return grads


def train(net, dataset, config=None):
    """
    Train in place and keep the parameters with the lowest eval loss

    Args:
        net (FSGNet): Network; its NetworkConfig supplies epochs, batch size,
            learning rate and seed
        dataset (tuple): (train samples, eval samples)
        config (TrainConfig): Mode, micro-batching and augmentation

    Returns:
        TrainReport: Per-epoch train and eval losses

    Raises:
        DataError: If the train fold is empty
    """
    config = config or TrainConfig()
    train_set, eval_set = (list(part) for part in dataset)
    if not train_set:
        raise DataError("Cannot train on an empty dataset")
    eval_set = eval_set or train_set

    net_config = net.config
    size = net_config.input_size
    conditioned_train = [condition_sample(s, config.preprocess) for s in train_set]
    conditioned_eval = [condition_sample(s, config.preprocess) for s in eval_set]
    stats = config.stats or compute_stats([s.frame for s in conditioned_train])

    train_examples = [prepare_example(s, size, stats, config.mode) for s in conditioned_train]
    eval_examples = [prepare_example(s, size, stats, config.mode) for s in conditioned_eval]

    report = TrainReport(mode=config.mode, n_train=len(train_set), n_eval=len(eval_set), stats=stats)
    rng = np.random.default_rng(net_config.seed)
    state = AdamState.for_params(net.parameters(), alpha=net_config.learning_rate)

    def record(epoch):
        train_loss = evaluate_loss(net, train_examples, config.micro_batch)
        eval_loss = evaluate_loss(net, eval_examples, config.micro_batch)
        report.history.append({"epoch": epoch, "train_loss": train_loss, "eval_loss": eval_loss})
        return eval_loss

    best_params = [p.copy() for p in net.parameters()]
    report.best_eval_loss = record(0)

    for epoch in range(1, net_config.epochs + 1):
        order = rng.permutation(len(conditioned_train))
        for batch_indices in _chunks(list(order), net_config.batch_size):
            examples = []
            for index in batch_indices:
                if not config.augment:
                    examples.append(train_examples[index])
                    continue
                try:
                    examples.append(
                        prepare_example(
                            conditioned_train[index], size, stats, config.mode, rng, config.augment_params
                        )
                    )
                except SkipSample:
                    report.skipped += 1
            if not examples:
                continue
            grads = _batch_gradients(net, examples, config.micro_batch)
            params, state = adam_step(net.parameters(), grads, state)
            net.set_parameters(params)

        eval_loss = record(epoch)
        if eval_loss < report.best_eval_loss:
            report.best_eval_loss = eval_loss
            report.best_epoch = epoch
            best_params = [p.copy() for p in net.parameters()]

    net.set_parameters(best_params)
    return report
