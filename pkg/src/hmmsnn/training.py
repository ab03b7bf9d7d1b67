"""
Model building and evaluation.

Every (class, state) network is trained from its own derived random
stream, so training the states concurrently gives exactly the same model as
training them one after another. Test items get per-item streams the same
way.
"""

from __future__ import annotations

import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from hmmsnn.errors import InvalidInputError
from hmmsnn.features import DEFAULT_R_MAX, to_rates
from hmmsnn.hmm import HMMModel, SegmentedObservation, classify, log_prob
from hmmsnn.segmentation import auto_segment
from hmmsnn.spikes import DEFAULT_SIGMA_MS, SpikeRaster, epsp_matrix, poisson_epsp_rows
from hmmsnn.wta import EMISSIONS, WTANetwork, train_on_epsp

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    P: int = 4
    K: int = 8
    N: int = 80
    T: int = 20
    sigma: int = DEFAULT_SIGMA_MS
    iterations: int = 10
    eta0: float = 1.0
    seed: int = 0
    r_max: float = DEFAULT_R_MAX
    self_prob: float = 0.5
    advance_prob: float = 0.5
    seg_threshold: int = 0
    seg_max_iter: int = 100
    emission: str = "peak"

    def __post_init__(self):
        if self.emission not in EMISSIONS:
            raise InvalidInputError(f"emission must be one of {EMISSIONS}, got {self.emission!r}")
        for name in ("P", "K", "N", "T", "seg_max_iter"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("sigma", "iterations", "seed", "seg_threshold"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not self.eta0 > 0 or not self.r_max > 0:
            raise InvalidInputError("eta0 and r_max must be positive")
        for name in ("self_prob", "advance_prob"):
            if not 0 < getattr(self, name) <= 1:
                raise InvalidInputError(f"{name} must be in (0, 1]")

    @classmethod
    def synthetic(cls, **overrides) -> TrainConfig:
        return cls(**{"P": 4, "iterations": 10, **overrides})

    @classmethod
    def speech(cls, **overrides) -> TrainConfig:
        return cls(**{"P": 10, "iterations": 100, **overrides})

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> TrainConfig:
        known = {f.name: f.type for f in fields(cls)}
        unknown = sorted(set(d) - set(known))
        if unknown:
            raise InvalidInputError(f"unknown config field(s): {', '.join(unknown)}")
        out = {}
        for name, value in d.items():
            caster = {"float": float, "str": str}.get(known[name], int)
            try:
                out[name] = caster(value)
            except (TypeError, ValueError):
                raise InvalidInputError(f"config field {name}: cannot parse {value!r}") from None
        return cls(**out)

    def with_overrides(self, **kw) -> TrainConfig:
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def derived_seed(seed: int, *key) -> np.random.SeedSequence:
    """Independent stream for a (seed, key...) tuple; strings are hashed."""
    spawn = tuple(zlib.crc32(k.encode()) if isinstance(k, str) else int(k) for k in key)
    return np.random.SeedSequence(int(seed), spawn_key=spawn)


def train_state(net: WTANetwork, segment_data, iterations: int, seed=None, sigma_ms: int = DEFAULT_SIGMA_MS) -> WTANetwork:
    """Present the rasters in a fresh random order every iteration, with
    one STDP learning event per 1 ms step. Mutates and returns ``net``."""
    rasters = list(segment_data)
    for r in rasters:
        if r.num_neurons != net.num_inputs:
            raise InvalidInputError(
                f"raster has {r.num_neurons} neurons, network expects {net.num_inputs}"
            )
    if iterations == 0 or not rasters:
        return net
    rng = np.random.default_rng(seed)
    blocks = [epsp_matrix(r, sigma_ms) for r in rasters]
    for _ in range(iterations):
        order = rng.permutation(len(blocks))
        train_on_epsp(net, np.concatenate([blocks[i] for i in order]), rng)
    return net


def train_state_rates(
    net: WTANetwork,
    rates,
    iterations: int,
    duration_ms: int,
    seed=None,
    sigma_ms: int = DEFAULT_SIGMA_MS,
) -> WTANetwork:
    """Like :func:`train_state`, but each presentation of a rate vector is
    a freshly drawn ``duration_ms`` Poisson raster."""
    rates = np.atleast_2d(np.asarray(rates, dtype=np.float64))
    if rates.shape[1] != net.num_inputs:
        raise InvalidInputError(
            f"rate vectors have {rates.shape[1]} entries, network expects {net.num_inputs}"
        )
    rng = np.random.default_rng(seed)
    for _ in range(iterations):
        order = rng.permutation(rates.shape[0])
        rows = poisson_epsp_rows(rates[order], duration_ms, sigma_ms, rng)
        train_on_epsp(net, rows, rng)
    return net


def _map(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _fresh_net(config, stream):
    return WTANetwork.random(config.N, config.K, seed=stream, eta0=config.eta0)


def _build_model(label, states, config):
    return HMMModel(
        label,
        states,
        self_prob=config.self_prob,
        advance_prob=config.advance_prob,
        emission=config.emission,
    )


def train_synthetic_model(label: str, samples, config: TrainConfig, jobs: int = 1) -> HMMModel:
    """Train a class model from segment-aligned samples.

    ``samples`` is a list of observations, each a list of ``P`` rasters;
    state ``p`` learns from the ``p``-th raster of every sample.
    """
    samples = [list(s) for s in samples]
    if not samples:
        raise InvalidInputError(f"class {label!r}: no training samples")
    for s in samples:
        if len(s) != config.P:
            raise InvalidInputError(f"class {label!r}: sample has {len(s)} segments, P = {config.P}")

    def job(p):
        rng = np.random.default_rng(derived_seed(config.seed, label, p))
        net = _fresh_net(config, rng)
        return train_state(net, [s[p] for s in samples], config.iterations, rng, config.sigma)

    return _build_model(label, _map(job, list(range(config.P)), jobs), config)


def segment_frames(frames, config: TrainConfig):
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[1] != config.N:
        raise InvalidInputError(f"frames must be (M, {config.N}), got shape {frames.shape}")
    if frames.shape[0] < config.P:
        raise InvalidInputError(f"sample has {frames.shape[0]} frames, fewer than P = {config.P}")
    return auto_segment(frames, config.P, config.seg_threshold, config.seg_max_iter)


def train_speech_model(label: str, samples, config: TrainConfig, jobs: int = 1) -> HMMModel:
    """Train a class model from raw frame sequences (auto-segmented first)."""
    samples = [np.asarray(s, dtype=np.float64) for s in samples]
    if not samples:
        raise InvalidInputError(f"class {label!r}: no training samples")
    per_state = [[] for _ in range(config.P)]
    for frames in samples:
        bounds = segment_frames(frames, config)
        rates = to_rates(frames, config.r_max)
        for p, sl in enumerate(bounds.slices()):
            per_state[p].append(rates[sl])
    per_state = [np.concatenate(chunks) for chunks in per_state]

    def job(p):
        rng = np.random.default_rng(derived_seed(config.seed, label, p))
        net = _fresh_net(config, rng)
        return train_state_rates(net, per_state[p], config.iterations, config.T, rng, config.sigma)

    return _build_model(label, _map(job, list(range(config.P)), jobs), config)


def train_class_model(label: str, samples, config: TrainConfig, jobs: int = 1) -> HMMModel:
    """Dispatch on sample type: raster lists (synthetic) or frame arrays (speech)."""
    samples = list(samples)
    if samples and isinstance(samples[0], (list, tuple)) and isinstance(samples[0][0], SpikeRaster):
        return train_synthetic_model(label, samples, config, jobs)
    return train_speech_model(label, samples, config, jobs)


def train_models(labelled_samples: dict, config: TrainConfig, jobs: int = 1) -> list[HMMModel]:
    """Train one model per class; class order follows the dict."""
    labels = list(labelled_samples)
    # each class fans out over its own states, so spread workers across classes
    inner = max(1, jobs // max(1, len(labels)))
    return _map(lambda lab: train_class_model(lab, labelled_samples[lab], config, inner), labels, jobs)


def prepare_speech_item(frames, config: TrainConfig, seed) -> SegmentedObservation:
    bounds = segment_frames(frames, config)
    return SegmentedObservation.from_frames(
        frames, bounds, seed, r_max=config.r_max, duration_ms=config.T, sigma_ms=config.sigma
    )


def as_observation(item, config: TrainConfig, seed) -> SegmentedObservation:
    if isinstance(item, SegmentedObservation):
        return item
    if isinstance(item, (list, tuple)) and item and isinstance(item[0], SpikeRaster):
        return SegmentedObservation.from_subpatterns(item, config.sigma)
    return prepare_speech_item(item, config, seed)


@dataclass
class EvalReport:
    labels: list[str]
    posterior_matrix: np.ndarray  # (models, desired classes)
    accuracy: float
    item_labels: list[str]
    log_probs: np.ndarray  # (items, models)
    roc_points: list = None

    @property
    def predictions(self) -> list[str]:
        return [self.labels[i] for i in np.argmax(self.log_probs, axis=1)]

    def class_accuracy(self) -> dict:
        pred = self.predictions
        out = {}
        for lab in self.labels:
            idx = [i for i, t in enumerate(self.item_labels) if t == lab]
            if idx:
                out[lab] = sum(pred[i] == lab for i in idx) / len(idx)
        return out

    def confusion(self) -> np.ndarray:
        """Counts, rows = recognized, columns = desired."""
        pos = {lab: i for i, lab in enumerate(self.labels)}
        out = np.zeros((len(self.labels), len(self.labels)), dtype=np.int64)
        for t, p in zip(self.item_labels, self.predictions):
            out[pos[p], pos[t]] += 1
        return out


def score_items(models, test_set, config: TrainConfig, seed: int = 0, jobs: int = 1) -> np.ndarray:
    """Log-probability of every (item, model) pair.

    Speech items are encoded once per item, so all models score the same
    spike trains.
    """
    models = list(models)

    def job(args):
        idx, item = args
        obs = as_observation(item, config, derived_seed(seed, "item", idx))
        return [log_prob(m, obs) for m in models]

    rows = _map(job, [(i, item) for i, (_, item) in enumerate(test_set)], jobs)
    return np.array(rows, dtype=np.float64).reshape(len(rows), len(models))


def report_from_scores(labels, item_labels, log_probs) -> EvalReport:
    labels = list(labels)
    item_labels = list(item_labels)
    unknown = sorted(set(item_labels) - set(labels))
    if unknown:
        raise InvalidInputError(f"test items with labels not among the models: {unknown}")
    lp = np.asarray(log_probs, dtype=np.float64)
    post = np.exp(lp - lp.max(axis=1, keepdims=True))
    post /= post.sum(axis=1, keepdims=True)
    matrix = np.full((len(labels), len(labels)), np.nan)
    for c, lab in enumerate(labels):
        idx = [i for i, t in enumerate(item_labels) if t == lab]
        if idx:
            matrix[:, c] = post[idx].mean(axis=0)
    pred = np.argmax(lp, axis=1)
    correct = sum(labels[p] == t for p, t in zip(pred, item_labels))
    return EvalReport(labels, matrix, correct / len(item_labels), item_labels, lp)


def evaluate(models, test_set, config: TrainConfig = None, seed: int = 0, jobs: int = 1) -> EvalReport:
    """Classify every ``(label, item)`` in ``test_set`` against ``models``.

    ``posterior_matrix[r, c]`` is the mean posterior of model ``r`` over the
    items whose desired class is model ``c``'s label.
    """
    models = list(models)
    test_set = list(test_set)
    if not test_set:
        raise InvalidInputError("empty test set")
    config = config or TrainConfig()
    lp = score_items(models, test_set, config, seed, jobs)
    return report_from_scores([m.label for m in models], [lab for lab, _ in test_set], lp)


@dataclass(frozen=True)
class RocPoint:
    log_ratio: float
    fp: float
    tp: float
    accuracy: float

    @property
    def ratio(self) -> float:
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_ratio))


def sweep_log_ratios(score_diff, is_positive, log_ratios) -> list[RocPoint]:
    """Decide positive when ``score_diff > log_ratio``.

    ``score_diff`` is ``log L1 - log L0`` per item. A ratio is the prior of
    class 0 over class 1, so small ratios favour the positive class 1.
    """
    d = np.asarray(score_diff, dtype=np.float64)
    pos = np.asarray(is_positive, dtype=bool)
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    out = []
    for lr in log_ratios:
        said_pos = d > lr
        tp = (said_pos & pos).sum() / n_pos if n_pos else 0.0
        fp = (said_pos & ~pos).sum() / n_neg if n_neg else 0.0
        acc = ((said_pos == pos).sum()) / d.shape[0]
        out.append(RocPoint(float(lr), float(fp), float(tp), float(acc)))
    return out


def default_log_ratios(score_diff) -> np.ndarray:
    """-inf, every distinct score difference (each is a ROC corner), +inf."""
    d = np.unique(np.asarray(score_diff, dtype=np.float64))
    return np.concatenate(([-np.inf], d, [np.inf]))


def prior_ratio_sweep(model0, model1, test_set, ratios=None, config: TrainConfig = None, seed: int = 0, jobs: int = 1) -> list[RocPoint]:
    """Binary ROC sweep; ``model1`` is the positive class."""
    test_set = list(test_set)
    config = config or TrainConfig()
    lp = score_items([model0, model1], test_set, config, seed, jobs)
    return sweep_scores(lp, [lab for lab, _ in test_set], model1.label, ratios)


def sweep_scores(log_probs, item_labels, positive_label, ratios=None) -> list[RocPoint]:
    lp = np.asarray(log_probs, dtype=np.float64)
    diff = lp[:, 1] - lp[:, 0]
    pos = [lab == positive_label for lab in item_labels]
    if ratios is None:
        log_ratios = default_log_ratios(diff)
    else:
        ratios = np.asarray(ratios, dtype=np.float64)
        if np.any(ratios < 0):
            raise InvalidInputError("prior ratios must be non-negative")
        with np.errstate(divide="ignore"):
            log_ratios = np.log(ratios)
    return sweep_log_ratios(diff, pos, log_ratios)


def _prior_accuracy(lp, truth, offsets):
    return float(np.mean(np.argmax(lp + offsets, axis=1) == truth))


def fit_log_priors(log_probs, labels, item_labels, max_rounds: int = 50) -> np.ndarray:
    """Per-class additive log-priors that maximize classification accuracy.

    Coordinate ascent: each round re-optimizes one class offset at a time
    over the points where that class's decisions change, keeping the
    others fixed. Among equally good offsets the one closest to the
    current value wins, so the search stops at the first plateau. The
    result is shifted so its largest entry is 0.
    """
    labels = list(labels)
    pos = {lab: i for i, lab in enumerate(labels)}
    try:
        truth = np.array([pos[t] for t in item_labels])
    except KeyError as exc:
        raise InvalidInputError(f"item label {exc} is not among the models") from None
    lp = np.asarray(log_probs, dtype=np.float64)
    if lp.shape != (truth.shape[0], len(labels)):
        raise InvalidInputError(f"log_probs must be (items, {len(labels)}), got {lp.shape}")
    offsets = np.zeros(len(labels))
    best = _prior_accuracy(lp, truth, offsets)
    for _ in range(max_rounds):
        improved = False
        for c in range(1, len(labels)):
            others = lp + offsets
            others[:, c] = -np.inf
            t = np.unique(others.max(axis=1) - lp[:, c])
            cands = np.concatenate(([t[0] - 1.0], (t[1:] + t[:-1]) / 2.0, [t[-1] + 1.0]))
            trial = np.repeat(offsets[None, :], cands.shape[0], axis=0)
            trial[:, c] = cands
            accs = np.array([_prior_accuracy(lp, truth, o) for o in trial])
            top = accs.max()
            if top > best:
                choice = np.flatnonzero(accs == top)
                offsets[c] = cands[choice[np.argmin(np.abs(cands[choice] - offsets[c]))]]
                best = top
                improved = True
        if not improved:
            break
    return offsets - offsets.max()


def with_log_priors(models, log_priors) -> list[HMMModel]:
    """Copies of ``models`` carrying the given class log-priors."""
    models = list(models)
    if len(log_priors) != len(models):
        raise InvalidInputError("need one log-prior per model")
    return [replace(m, log_prior=float(v)) for m, v in zip(models, log_priors)]


def calibrate_models(models, train_set, config: TrainConfig, seed: int = 0, jobs: int = 1) -> list[HMMModel]:
    """Fit class log-priors on (labelled) training items and attach them."""
    models = [replace(m, log_prior=0.0) for m in models]
    train_set = list(train_set)
    lp = score_items(models, train_set, config, seed, jobs)
    offsets = fit_log_priors(lp, [m.label for m in models], [lab for lab, _ in train_set])
    return with_log_priors(models, offsets)


def winner_weighted_weights(net: WTANetwork) -> np.ndarray:
    """Mean weight row, each unit weighted by how many times it won.

    Units that never fired keep their initial weights and are ignored;
    with no wins at all this is the plain row mean.
    """
    wins = (net.fire_counts - 1).astype(np.float64)
    if wins.sum() == 0:
        return net.weights.mean(axis=0)
    return wins @ net.weights / wins.sum()


__all__ = [
    "EvalReport",
    "calibrate_models",
    "fit_log_priors",
    "with_log_priors",
    "RocPoint",
    "TrainConfig",
    "classify",
    "default_log_ratios",
    "derived_seed",
    "evaluate",
    "prepare_speech_item",
    "prior_ratio_sweep",
    "score_items",
    "sweep_log_ratios",
    "sweep_scores",
    "train_class_model",
    "train_models",
    "train_speech_model",
    "train_state",
    "train_state_rates",
    "train_synthetic_model",
    "winner_weighted_weights",
]
