"""
Deterministic toy trainer: SGD with momentum, warm-up cosine schedule,
softmax cross-entropy, per-epoch metrics CSV and an optional weights dump.
"""

import csv
import io
import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Literal, Optional, Set, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from ctnet.core.autograd import ParamStore, TrainConfig, cosine_warmup_lr, sgd_step
from ctnet.core.autograd import functional as F
from ctnet.core.autograd.tensor import no_grad
from ctnet.core.conv.spec import TSConvWeights, load_tsconv, save_tsconv
from ctnet.core.excitation.te import load_te, save_te
from ctnet.core.tensor.io import load_tensor, save_tensor
from ctnet.error_handling import Diverged
from ctnet.net.config import NetSpec
from ctnet.net.layers import ForwardContext, Layer, TensorExcitation, TSConvLayer
from ctnet.net.network import Network, build_network, forward, init_params
from ctnet.train.synthetic import ClipSet, SyntheticTask, gen_synthetic

logger = logging.getLogger(__name__)

CSV_HEADER = ["epoch", "lr", "train_loss", "train_acc", "val_acc"]


class EpochMetrics(BaseModel):
    epoch: int
    lr: float
    train_loss: float
    train_acc: float
    val_acc: float


class TrainReport(BaseModel):
    kind: Literal["train"] = "train"
    task: str
    preset: str
    seed: int
    epochs: int
    history: List[EpochMetrics]

    @property
    def baseline_val_acc(self) -> float:
        return self.history[0].val_acc

    @property
    def final_val_acc(self) -> float:
        return self.history[-1].val_acc

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for m in self.history:
            writer.writerow([m.epoch, repr(m.lr), repr(m.train_loss), repr(m.train_acc), repr(m.val_acc)])
        return buf.getvalue()


class WeightsSidecar(BaseModel):
    """Index of a weights dump: plain tensor shapes by name, then the TSConv and TE bundles."""
    params: Dict[str, List[int]]
    state: Dict[str, List[int]]
    tsconv: List[str] = Field(default_factory=list)
    te: List[str] = Field(default_factory=list)
    dtype: str


def evaluate(net: Network, store: ParamStore, data: ClipSet, batch_size: int) -> Tuple[float, float]:
    """Mean loss and accuracy with BN in eval mode."""
    total_loss, correct = 0.0, 0
    with no_grad():
        for xb, yb in data.batches(batch_size):
            logits, _ = forward(net, store, xb)
            total_loss += float(F.softmax_cross_entropy(logits, yb).data) * len(yb)
            correct += int(np.sum(np.argmax(logits.data, axis=1) == yb))
    return total_loss / len(data), correct / len(data)


def train_epoch(
    net: Network,
    store: ParamStore,
    data: ClipSet,
    cfg: TrainConfig,
    lr: float,
    rng: np.random.Generator,
    step: int,
) -> Tuple[ParamStore, float, float, int]:
    total_loss, correct = 0.0, 0
    for xb, yb in data.batches(cfg.batch_size, rng.permutation(len(data))):
        leaves = store.leaves()
        logits, updates = forward(net, leaves, xb, train=not cfg.freeze_bn, state=store.state)
        loss = F.softmax_cross_entropy(logits, yb)
        value = float(loss.data)
        if not math.isfinite(value):
            logger.error(f"❌ Loss diverged at step {step}: {value}")
            raise Diverged(step, value)
        loss.backward()
        store.collect_grads(leaves)
        store = sgd_step(store, lr, cfg.momentum, cfg.weight_decay)
        store.update_state(updates)
        total_loss += value * len(yb)
        correct += int(np.sum(np.argmax(logits.data, axis=1) == yb))
        step += 1
    return store, total_loss / len(data), correct / len(data), step


def train(
    spec: NetSpec,
    cfg: TrainConfig,
    task: SyntheticTask,
    out_csv: Optional[Union[str, Path]] = None,
    save_weights: Optional[Union[str, Path]] = None,
    dtype: str = "float64",
) -> TrainReport:
    """
    Train on the task's train split and evaluate on its val split.

    Row 0 of the history is the untrained network evaluated in eval mode;
    rows 1..epochs follow each training epoch.
    """
    rng = np.random.default_rng(cfg.seed)
    net = build_network(spec)
    store = init_params(net, rng)
    train_set = gen_synthetic(task, "train", cfg.seed)
    val_set = gen_synthetic(task, "val", cfg.seed)
    logger.info(
        f"🚀 Training {spec.block.preset.value} on {task.name}: {len(train_set)} train / "
        f"{len(val_set)} val clips, {store.num_params:,} params, {cfg.epochs} epochs"
    )

    loss0, acc0 = evaluate(net, store, train_set, cfg.batch_size)
    _, val0 = evaluate(net, store, val_set, cfg.batch_size)
    history = [EpochMetrics(epoch=0, lr=0.0, train_loss=loss0, train_acc=acc0, val_acc=val0)]

    step = 0
    for epoch in range(cfg.epochs):
        lr = cosine_warmup_lr(epoch, cfg)
        store, loss, acc, step = train_epoch(net, store, train_set, cfg, lr, rng, step)
        _, val_acc = evaluate(net, store, val_set, cfg.batch_size)
        history.append(EpochMetrics(epoch=epoch + 1, lr=lr, train_loss=loss, train_acc=acc, val_acc=val_acc))
        logger.info(
            f"📊 epoch {epoch + 1}/{cfg.epochs} lr={lr:.4f} loss={loss:.4f} "
            f"train_acc={acc:.3f} val_acc={val_acc:.3f}"
        )

    report = TrainReport(
        task=task.name,
        preset=spec.block.preset.value,
        seed=cfg.seed,
        epochs=cfg.epochs,
        history=history,
    )
    if out_csv is not None:
        Path(out_csv).parent.mkdir(parents=True, exist_ok=True)
        Path(out_csv).write_text(report.to_csv())
        logger.info(f"📊 Metrics written to {out_csv}")
    if save_weights is not None:
        dump_weights(save_weights, store, dtype, net)
    logger.info(f"✅ Final val accuracy: {report.final_val_acc:.3f}")
    return report


def dump_weights(
    directory: Union[str, Path],
    store: ParamStore,
    dtype: str = "float64",
    net: Optional[Layer] = None,
) -> None:
    """
    Write a weights dump plus weights.json.

    With the network at hand every Tensor Excitation goes through save_te and
    every other TSConv through save_tsconv, each with its own JSON sidecar;
    whatever is left is written as one CTN1 file per name.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    claimed: Set[str] = set()
    tsconvs: List[str] = []
    tes: List[str] = []
    ctx = ForwardContext(store.params, store.state)
    for layer in net.walk() if net is not None else ():
        # a TE is walked before its gate convs, which it claims
        if isinstance(layer, TensorExcitation):
            save_te(directory, layer.name, layer.params(ctx), dtype)
            claimed.update(s.name for s in layer.all_param_specs() + layer.all_state_specs())
            tes.append(layer.name)
        elif isinstance(layer, TSConvLayer) and layer.weight.name not in claimed:
            weights = TSConvWeights(store[layer.weight.name])
            save_tsconv(directory, layer.name, layer.spec, weights, dtype)
            claimed.add(layer.weight.name)
            tsconvs.append(layer.name)

    params = {k: v for k, v in store.params.items() if k not in claimed}
    state = {k: v for k, v in store.state.items() if k not in claimed}
    for name, value in list(params.items()) + list(state.items()):
        save_tensor(directory / f"{name}.ctn", value, dtype)
    sidecar = WeightsSidecar(
        params={k: list(v.shape) for k, v in params.items()},
        state={k: list(v.shape) for k, v in state.items()},
        tsconv=tsconvs,
        te=tes,
        dtype=dtype,
    )
    (directory / "weights.json").write_text(sidecar.model_dump_json(indent=2))
    logger.info(
        f"📁 Weights written to {directory}: {len(tsconvs)} TSConv and {len(tes)} TE bundles, "
        f"{len(params) + len(state)} plain tensors"
    )


def load_weights(directory: Union[str, Path]) -> ParamStore:
    """Read a dump written by dump_weights back into one flat store."""
    directory = Path(directory)
    sidecar = WeightsSidecar.model_validate(json.loads((directory / "weights.json").read_text()))
    store = ParamStore()
    for name in sidecar.params:
        store.add(name, load_tensor(directory / f"{name}.ctn"))
    for name in sidecar.state:
        store.add_state(name, load_tensor(directory / f"{name}.ctn"))
    for name in sidecar.tsconv:
        _, weights = load_tsconv(directory, name)
        store.add(f"{name}.weight", weights.weight)
    for name in sidecar.te:
        p = load_te(directory, name)
        params, state = TensorExcitation(name, p.factorization, p.k).entries(p)
        for key, value in params.items():
            store.add(key, value)
        for key, value in state.items():
            store.add_state(key, value)
    return store
