"""
Randomized property suites behind `ctnet verify`.

Case i of a suite draws everything from numpy.random.default_rng(seed + i),
so a failing case replays exactly with `--seed <seed + i> --trials 1`.
"""

import logging
from typing import Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, computed_field

from ctnet.analysis.interaction import interaction_matrix, predicted_interaction
from ctnet.analysis.receptive_field import probe_rf
from ctnet.core.autograd import functional as F
from ctnet.core.autograd.tensor import Tensor, no_grad
from ctnet.core.conv import kernels
from ctnet.core.conv.spec import TSConvSpec, TSConvWeights
from ctnet.core.excitation.te import GATES, GateParams, TEParams, te_apply
from ctnet.core.tensor import ops
from ctnet.core.tensor.factorization import ChannelFactorization
from ctnet.error_handling import ConfigInvalid
from ctnet.net.config import (
    BlockTemplate,
    Connection,
    CTBlockConfig,
    NetSpec,
    Preset,
    SubOpSpec,
    Variant,
    balanced,
)
from ctnet.net.network import build_ct_block, build_network, forward, init_params
from ctnet.net.presets import build_preset

logger = logging.getLogger(__name__)

EQUIVALENCE_TOL = 1e-10
PRIMITIVE_GRAD_TOL = 1e-5
NETWORK_GRAD_TOL = 1e-4
DEGENERATE_TOL = 1e-10


class CaseResult(BaseModel):
    index: int
    seed: int
    label: str
    max_error: float
    tolerance: float

    @computed_field
    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_error)) and self.max_error <= self.tolerance


class VerifyReport(BaseModel):
    kind: Literal["verify"] = "verify"
    suite: str
    seed: int
    trials: int
    cases: List[CaseResult]

    @computed_field
    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)

    @property
    def failures(self) -> List[CaseResult]:
        return [c for c in self.cases if not c.passed]

    def render(self) -> str:
        lines = [f"verify {self.suite}: {sum(c.passed for c in self.cases)}/{len(self.cases)} pass"]
        for c in self.cases:
            mark = "ok  " if c.passed else "FAIL"
            lines.append(
                f"  [{mark}] #{c.index:<3} seed={c.seed:<6} {c.label:<44} "
                f"max_err={c.max_error:.3e} (tol {c.tolerance:.0e})"
            )
        if self.failures:
            seeds = ", ".join(str(c.seed) for c in self.failures)
            lines.append(f"❌ replay failing cases with --seed in {{{seeds}}} --trials 1")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# random configurations
# ---------------------------------------------------------------------------

def random_factorization(rng: np.random.Generator, max_k: int = 4, max_size: int = 3) -> ChannelFactorization:
    k = int(rng.integers(1, max_k + 1))
    return ChannelFactorization(tuple(int(s) for s in rng.integers(1, max_size + 1, size=k)))


def random_kernel(rng: np.random.Generator) -> Tuple[int, int, int]:
    return tuple(int(v) for v in rng.choice([1, 3, 5], size=3))


def _max_rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)), 1e-8)
    return float(np.max(np.abs(a - b), initial=0.0)) / scale


# ---------------------------------------------------------------------------
# equivalence: grouped TSConv vs the loop oracle
# ---------------------------------------------------------------------------

def _equivalence_case(rng: np.random.Generator) -> Tuple[str, float]:
    f = random_factorization(rng)
    k = int(rng.integers(1, f.K + 1))
    spec = TSConvSpec(f, k, random_kernel(rng), bias=bool(rng.integers(0, 2)))
    n = int(rng.integers(1, 3))
    t, h, w = (int(v) for v in rng.integers(1, 6, size=3))
    x = rng.standard_normal((n, f.product, t, h, w))
    weights = TSConvWeights.init(spec, rng)
    if weights.bias is not None:
        weights = TSConvWeights(weights.weight, rng.standard_normal(spec.channels))
    direct = kernels.tsconv_direct(x, spec, weights)
    grouped = kernels.tsconv_grouped(x, spec, weights)
    general = kernels.tsconv_grouped(x, spec, weights, fast_path=False)
    err = max(float(np.max(np.abs(direct - grouped))), float(np.max(np.abs(general - grouped))))
    label = f"f={f} k={k} kernel={'x'.join(map(str, spec.kernel))} dims={n}x{t}x{h}x{w}"
    return label, err


def _input_equivalence_case(rng: np.random.Generator, x: np.ndarray) -> Tuple[str, float]:
    """Grouped vs oracle on a caller-supplied tensor, channels split into two balanced factors."""
    x = ops.as_tensor5(x)
    f = balanced(x.shape[1], 2)
    k = int(rng.integers(1, f.K + 1))
    spec = TSConvSpec(f, k, random_kernel(rng))
    weights = TSConvWeights.init(spec, rng)
    err = float(np.max(np.abs(kernels.tsconv_direct(x, spec, weights) - kernels.tsconv_grouped(x, spec, weights))))
    return f"input f={f} k={k} kernel={'x'.join(map(str, spec.kernel))}", err


# ---------------------------------------------------------------------------
# gradients: analytic vs central differences
# ---------------------------------------------------------------------------

def _numeric_grad(loss: Callable[[], float], x: np.ndarray, eps: float) -> np.ndarray:
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        orig = x[idx]
        x[idx] = orig + eps
        plus = loss()
        x[idx] = orig - eps
        minus = loss()
        x[idx] = orig
        grad[idx] = (plus - minus) / (2 * eps)
    return grad


def check_gradients(
    op: Callable[..., Tensor], inputs: Sequence[np.ndarray], rng: np.random.Generator, eps: float = 1e-5
) -> float:
    """Max normalized error between backward() and finite differences over every input."""
    arrays = [np.array(a, dtype=np.float64) for a in inputs]
    with no_grad():
        probe = op(*arrays)
    projection = rng.standard_normal(probe.shape)

    def loss() -> float:
        with no_grad():
            return float(np.sum(op(*arrays).data * projection))

    leaves = [Tensor(a, requires_grad=True) for a in arrays]
    F.total(F.mul_broadcast(op(*leaves), projection)).backward()
    errors = []
    for leaf, a in zip(leaves, arrays):
        analytic = leaf.grad if leaf.grad is not None else np.zeros_like(a)
        errors.append(_max_rel(analytic, _numeric_grad(loss, a, eps)))
    return max(errors)


def _bn_train(x, g, b):
    return F.batch_norm(x, g, b, np.zeros(g.shape[0]), np.ones(g.shape[0]), mode="train")[0]


def _bn_eval(rm, rv):
    return lambda x, g, b: F.batch_norm(x, g, b, rm, rv, mode="eval")[0]


def _primitive_cases() -> List[Tuple[str, Callable[[np.random.Generator], Tuple[Callable, List[np.ndarray]]]]]:
    def shape(rng, c=3):
        return (2, c) + tuple(int(v) for v in rng.integers(1, 4, size=3))

    def add(rng):
        s = shape(rng)
        return F.add, [rng.standard_normal(s), rng.standard_normal(s)]

    def mul(rng):
        s = shape(rng)
        attn = (s[0], s[1], 1) + s[3:]
        return F.mul_broadcast, [rng.standard_normal(s), rng.standard_normal(attn)]

    def scale(rng):
        return (lambda x: F.scale(x, 0.7)), [rng.standard_normal(shape(rng))]

    def sigmoid(rng):
        return F.sigmoid, [rng.standard_normal(shape(rng))]

    def relu(rng):
        s = shape(rng)
        # keep clear of the kink at zero
        return F.relu, [rng.uniform(0.1, 1.0, s) * rng.choice([-1.0, 1.0], size=s)]

    def t_pool(rng):
        return F.t_pool, [rng.standard_normal(shape(rng))]

    def s_pool(rng):
        return F.s_pool, [rng.standard_normal(shape(rng))]

    def global_pool(rng):
        return F.global_pool, [rng.standard_normal(shape(rng))]

    def bn_train(rng):
        s = shape(rng)
        return _bn_train, [rng.standard_normal(s), rng.uniform(0.5, 1.5, 3), rng.standard_normal(3)]

    def bn_eval(rng):
        s = shape(rng)
        fn = _bn_eval(rng.standard_normal(3), rng.uniform(0.5, 2.0, 3))
        return fn, [rng.standard_normal(s), rng.uniform(0.5, 1.5, 3), rng.standard_normal(3)]

    def conv(rng):
        groups = int(rng.choice([1, 2]))
        kernel = random_kernel(rng)
        stride = (1, int(rng.integers(1, 3)), int(rng.integers(1, 3)))
        x = rng.standard_normal((2, 4, 3, 4, 4))
        w = rng.standard_normal((4, 4 // groups) + kernel)
        b = rng.standard_normal(4)
        return (lambda x, w, b: F.conv3d(x, w, groups=groups, stride=stride, bias=b)), [x, w, b]

    def tsconv(rng):
        f = random_factorization(rng, max_k=3)
        spec = TSConvSpec(f, int(rng.integers(1, f.K + 1)), random_kernel(rng))
        x = rng.standard_normal((2, f.product, 3, 3, 3))
        return (lambda x, w: F.tsconv(x, spec, w)), [x, rng.standard_normal(spec.weight_shape)]

    def max_pool(rng):
        s = (1, 2, 2, 5, 5)
        # distinct values, far apart relative to eps, so the argmax is stable
        x = rng.permutation(int(np.prod(s))).reshape(s) * 0.01
        return F.max_pool_spatial, [x]

    def linear(rng):
        return F.linear, [rng.standard_normal((3, 5)), rng.standard_normal((4, 5)), rng.standard_normal(4)]

    def cross_entropy(rng):
        labels = rng.integers(0, 5, size=4)
        return (lambda z: F.softmax_cross_entropy(z, labels)), [rng.standard_normal((4, 5))]

    def excitation(rng):
        f = random_factorization(rng, max_k=2)
        k = int(rng.integers(1, f.K + 1))
        c = f.product
        base = TEParams.init(f, k, rng)
        s = (2, c, 3, 3, 3)

        def fn(xs, xt, ws, wt, wc):
            weights = {"spatial": ws, "temporal": wt, "channel": wc}
            gates = {
                g: GateParams(weights[g], np.ones(c), np.zeros(c), np.zeros(c), np.ones(c))
                for g in GATES
            }
            return te_apply(xs, xt, TEParams(f, k, **gates), mode="train")

        weights = [np.asarray(base.gate(g).weight) for g in GATES]
        return fn, [rng.standard_normal(s), rng.standard_normal(s)] + weights

    return [
        ("add", add), ("mul_broadcast", mul), ("scale", scale), ("sigmoid", sigmoid),
        ("relu", relu), ("t_pool", t_pool), ("s_pool", s_pool), ("global_pool", global_pool),
        ("batch_norm[train]", bn_train), ("batch_norm[eval]", bn_eval), ("conv3d", conv),
        ("tsconv", tsconv), ("max_pool_spatial", max_pool), ("linear", linear),
        ("softmax_cross_entropy", cross_entropy), ("te_apply", excitation),
    ]


PRIMITIVES = _primitive_cases()


def check_network_gradients(rng: np.random.Generator, directions: int = 6, eps: float = 1e-6) -> float:
    """
    Directional-derivative check of a two-block toy network in train mode:
    the gradient direction plus random directions on single parameter tensors.
    """
    spec = NetSpec.toy(frames=4, resolution=8)
    net = build_network(spec)
    store = init_params(net, rng)
    x = rng.standard_normal((2, spec.in_channels, spec.frames, spec.resolution, spec.resolution))
    labels = rng.integers(0, spec.classes, size=2)

    def loss_at(params: Dict[str, np.ndarray]) -> float:
        with no_grad():
            logits, _ = forward(net, params, x, train=True, state=store.state)
            return float(F.softmax_cross_entropy(logits, labels).data)

    leaves = store.leaves()
    logits, _ = forward(net, leaves, x, train=True, state=store.state)
    F.softmax_cross_entropy(logits, labels).backward()
    store.collect_grads(leaves)

    names = list(store.params)
    norm = np.sqrt(sum(float(np.sum(g * g)) for g in store.grads.values()))
    candidates = [{n: store.grads[n] / max(norm, 1e-12) for n in names}]
    for name in rng.choice(names, size=directions, replace=False):
        d = rng.standard_normal(store.params[name].shape)
        candidates.append({name: d / np.linalg.norm(d)})

    worst = 0.0
    for direction in candidates:
        plus = {n: p + eps * direction[n] if n in direction else p for n, p in store.params.items()}
        minus = {n: p - eps * direction[n] if n in direction else p for n, p in store.params.items()}
        numeric = (loss_at(plus) - loss_at(minus)) / (2 * eps)
        analytic = sum(float(np.sum(store.grads[n] * d)) for n, d in direction.items())
        worst = max(worst, abs(numeric - analytic) / max(abs(numeric), abs(analytic), 1e-5))
    return worst


# ---------------------------------------------------------------------------
# degenerate presets vs hand-built references
# ---------------------------------------------------------------------------

def _randomize_bn(store, rng: np.random.Generator) -> None:
    for name in store.params:
        if name.endswith(".gamma"):
            store.params[name] = rng.uniform(0.5, 1.5, store.params[name].shape)
        elif name.endswith(".beta"):
            store.params[name] = rng.standard_normal(store.params[name].shape)
    for name in store.state:
        if name.endswith(".running_mean"):
            store.state[name] = rng.standard_normal(store.state[name].shape)
        else:
            store.state[name] = rng.uniform(0.5, 2.0, store.state[name].shape)


def _bn(store, name: str, x: np.ndarray) -> np.ndarray:
    params = ops.BatchNormParams(
        store.params[f"{name}.gamma"], store.params[f"{name}.beta"],
        store.state[f"{name}.running_mean"], store.state[f"{name}.running_var"],
    )
    return ops.batch_norm(x, params, mode="eval")[0]


def _reference(preset: Preset, cfg: CTBlockConfig, store, x: np.ndarray) -> np.ndarray:
    p = store.params
    c = cfg.channels
    if preset is Preset.C3D or preset is Preset.TSN:
        return ops.relu(_bn(store, "ct.sub1.bn", kernels.tconv_full(x, p["ct.sub1.conv.weight"][0])))
    if preset is Preset.R21D:
        y = ops.relu(_bn(store, "ct.sub1.bn", kernels.conv3d(x, p["ct.sub1.conv.weight"][0])))
        return ops.relu(_bn(store, "ct.sub2.bn", kernels.conv3d(y, p["ct.sub2.conv.weight"][0])))
    if preset is Preset.CSN:
        y = ops.relu(_bn(store, "ct.sub1.bn", kernels.pointwise_conv(x, p["ct.sub1.conv.weight"][0])))
        depthwise = p["ct.sub2.conv.weight"].reshape((c, 1) + cfg.subops[1].spatial)
        return ops.relu(_bn(store, "ct.sub2.bn", kernels.conv3d(y, depthwise, groups=c)))
    y = x
    for i, op in enumerate(cfg.subops, 1):
        s_spec = TSConvSpec(cfg.factorization, op.axis, op.spatial)
        t_spec = TSConvSpec(cfg.factorization, op.axis, op.temporal)
        xs = _bn(store, f"ct.sub{i}.spatial_bn",
                 kernels.tsconv_direct(y, s_spec, TSConvWeights(p[f"ct.sub{i}.spatial.weight"])))
        xt = _bn(store, f"ct.sub{i}.temporal_bn",
                 kernels.tsconv_direct(y, t_spec, TSConvWeights(p[f"ct.sub{i}.temporal.weight"])))
        y = ops.relu(kernels.combine(xs, xt, "parallel"))
    return y


DEGENERATE_PRESETS = (Preset.C3D, Preset.R21D, Preset.CSN, Preset.TSN, Preset.CTNET)


def _degenerate_case(rng: np.random.Generator, preset: Preset) -> Tuple[str, float]:
    c = int(rng.choice([4, 6, 9]))
    cfg = build_preset(preset, c)
    module = build_ct_block(cfg, Variant.SIMPLE)
    store = init_params(module, rng)
    _randomize_bn(store, rng)
    t, h, w = (int(v) for v in rng.integers(2, 5, size=3))
    x = rng.standard_normal((2, c, t, h, w))
    with no_grad():
        out, _ = forward(module, store, x)
    err = float(np.max(np.abs(out.data - _reference(preset, cfg, store, x))))
    return f"{preset.value} C={c} f={cfg.factorization} dims={t}x{h}x{w}", err


# ---------------------------------------------------------------------------
# interaction structure and interact field
# ---------------------------------------------------------------------------

def _interaction_case(rng: np.random.Generator) -> Tuple[str, float]:
    f = random_factorization(rng, max_k=3)
    axis = int(rng.integers(1, f.K + 1))
    cfg = CTBlockConfig(f.product, f, (SubOpSpec(axis),))
    measured = interaction_matrix(build_ct_block(cfg), f.product)
    mismatches = int(np.sum(measured != predicted_interaction(f, [axis])))
    return f"one sub-op f={f} axis={axis}", float(mismatches)


def _fixed_interaction_cases() -> List[Tuple[str, Callable[[], float]]]:
    def full_block() -> float:
        cfg = build_preset(Preset.CTNET, 12, Variant.SIMPLE)
        return float(np.sum(~interaction_matrix(build_ct_block(cfg), 12)))

    def csn_depthwise() -> float:
        c = 6
        f = ChannelFactorization.of(c, 1)
        cfg = CTBlockConfig(c, f, (SubOpSpec(2, Connection.COUPLING, ((3, 3, 3),)),))
        return float(np.sum(interaction_matrix(build_ct_block(cfg), c) != np.eye(c, dtype=bool)))

    def rf(preset: Preset, k: int, expected: Tuple[int, int, int], cube: bool) -> Callable[[], float]:
        def run() -> float:
            template_k = {"k": k, "factorization": "balanced"} if k != 2 else {}
            if preset is Preset.CTNET:
                cfg = BlockTemplate(**template_k).resolve(8, Variant.SIMPLE)
            else:
                cfg = build_preset(preset, 8)
            report = probe_rf(build_ct_block(cfg), (9, 9, 9))
            return float(report.extents != list(expected)) + float(report.full_cube != cube)
        return run

    return [
        ("K=2 CT-Module interacts fully", full_block),
        ("CSN depth-wise sub-op is diagonal", csn_depthwise),
        ("rf K=1 parallel -> 3x3x3 cross", rf(Preset.CTNET, 1, (3, 3, 3), False)),
        ("rf K=2 parallel -> 5x5x5", rf(Preset.CTNET, 2, (5, 5, 5), False)),
        ("rf C3D -> full 3x3x3 cube", rf(Preset.C3D, 1, (3, 3, 3), True)),
    ]


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

SUITES = ("equivalence", "gradients", "degenerate", "interaction")


def run_suite(
    suite: str,
    seed: int = 42,
    trials: int = 10,
    input_tensor: Optional[np.ndarray] = None,
) -> VerifyReport:
    """
    Run a property suite; never raises on a failing case, the report says so.

    With `input_tensor`, the equivalence suite adds one more case that runs on
    that tensor instead of a random one.
    """
    if suite not in SUITES:
        raise ConfigInvalid(f"Unknown verify suite {suite!r}", {"known": list(SUITES)})
    if trials < 1:
        raise ConfigInvalid(f"trials must be >= 1, got {trials}")
    cases: List[CaseResult] = []

    def record(index: int, label: str, err: float, tol: float) -> None:
        cases.append(CaseResult(index=index, seed=seed + index, label=label, max_error=err, tolerance=tol))
        logger.debug(f"verify {suite} #{index}: {label} err={err:.3e}")

    for i in range(trials):
        rng = np.random.default_rng(seed + i)
        if suite == "equivalence":
            label, err = _equivalence_case(rng)
            record(i, label, err, EQUIVALENCE_TOL)
        elif suite == "gradients":
            name, make = PRIMITIVES[(seed + i) % len(PRIMITIVES)]
            op, inputs = make(rng)
            record(i, name, check_gradients(op, inputs, rng), PRIMITIVE_GRAD_TOL)
        elif suite == "degenerate":
            preset = DEGENERATE_PRESETS[(seed + i) % len(DEGENERATE_PRESETS)]
            label, err = _degenerate_case(rng, preset)
            record(i, label, err, DEGENERATE_TOL)
        else:
            label, err = _interaction_case(rng)
            record(i, label, err, 0.0)

    if suite == "gradients":
        rng = np.random.default_rng(seed + trials)
        record(trials, "toy network end to end", check_network_gradients(rng), NETWORK_GRAD_TOL)
    elif suite == "interaction":
        for j, (label, run) in enumerate(_fixed_interaction_cases(), trials):
            record(j, label, run(), 0.0)
    if suite == "equivalence" and input_tensor is not None:
        rng = np.random.default_rng(seed + trials)
        label, err = _input_equivalence_case(rng, input_tensor)
        record(trials, label, err, EQUIVALENCE_TOL)

    return VerifyReport(suite=suite, seed=seed, trials=trials, cases=cases)
