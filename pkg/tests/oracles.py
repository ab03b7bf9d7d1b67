"""Independent reference computations used by the tests.

The partition and probability oracles recompute their quantities from
first principles without touching the package's numerical code. The
SNN-vs-GMM harness at the end is the exception: it drives the package's
network and EM step and compares their cluster assignments.
"""

import itertools
import math

import mpmath
import numpy as np

from hmmsnn.oracle import GMMState, gmm_em_step, gmm_responsibility
from hmmsnn.wta import WTANetwork, responsibility, train_on_epsp


def partition_sse(frames, last):
    """Within-segment sum of squared distances to segment means."""
    total, start = 0.0, 0
    for end in last:
        seg = frames[start : end + 1]
        total += float(((seg - seg.mean(axis=0)) ** 2).sum())
        start = end + 1
    return total


def exhaustive_partition(frames, num_segments):
    """Minimum-SSE contiguous partition by enumerating every cut set."""
    m = frames.shape[0]
    best, best_last = np.inf, None
    for cuts in itertools.combinations(range(m - 1), num_segments - 1):
        last = list(cuts) + [m - 1]
        cost = partition_sse(frames, last)
        if cost < best - 1e-12:
            best, best_last = cost, last
    return best_last, best


def dp_partition(frames, num_segments):
    """Exact minimum-SSE contiguous partition by dynamic programming."""
    m = frames.shape[0]
    cost = np.full((m, m), np.inf)
    for a in range(m):
        for b in range(a, m):
            seg = frames[a : b + 1]
            cost[a, b] = ((seg - seg.mean(axis=0)) ** 2).sum()
    best = np.full((num_segments + 1, m + 1), np.inf)
    arg = np.zeros((num_segments + 1, m + 1), dtype=int)
    best[0, 0] = 0.0
    for p in range(1, num_segments + 1):
        for end in range(p, m + 1):
            for start in range(p - 1, end):
                c = best[p - 1, start] + cost[start, end - 1]
                if c < best[p, end]:
                    best[p, end], arg[p, end] = c, start
    last, end = [], m
    for p in range(num_segments, 0, -1):
        last.append(end - 1)
        end = arg[p, end]
    return last[::-1], float(best[num_segments, m])


def piecewise_frames(rng, num_segments, dim=80, min_len=1, max_len=20, ratio=10.0):
    """Piecewise-constant frames with Gaussian noise.

    The smallest distance between adjacent levels is ``ratio`` times the
    expected noise norm (per-component sd * sqrt(dim)). Returns the frames
    and the true last-frame indices.
    """
    lengths = rng.integers(min_len, max_len + 1, size=num_segments)
    levels = rng.uniform(0.0, 1.0, size=(num_segments, dim))
    gap = min(np.linalg.norm(levels[i + 1] - levels[i]) for i in range(num_segments - 1)) if num_segments > 1 else 1.0
    sd = gap / ratio / math.sqrt(dim)
    frames = np.concatenate([np.repeat(levels[i][None], n, axis=0) for i, n in enumerate(lengths)])
    frames = frames + rng.normal(scale=sd, size=frames.shape)
    return np.clip(frames, 0.0, None), list(np.cumsum(lengths) - 1)


# ------------------------------------------------------------ SNN vs GMM


def bernoulli_clusters(rng, k=3, n=30, per=200):
    """k clusters with disjoint high-probability input blocks."""
    probs = np.full((k, n), 0.05)
    block = n // k
    for c in range(k):
        probs[c, c * block : (c + 1) * block] = 0.9
    labels = np.repeat(np.arange(k), per)
    data = (rng.random((k * per, n)) < probs[labels]).astype(np.uint8)
    return data, labels, probs


def agreement(a, b, k):
    """Fraction of points on which two clusterings agree, up to relabeling."""
    return max(np.mean(np.array(perm)[a] == b) for perm in itertools.permutations(range(k)))


def snn_vs_gmm_agreement(seed):
    """SNN winner vs EM-fitted GMM argmax, agreement up to relabeling."""
    rng = np.random.default_rng(seed)
    data, _, _ = bernoulli_clusters(rng)
    net = WTANetwork.random(data.shape[1], 3, seed=rng)
    order = rng.permutation(data.shape[0])
    for _ in range(5):
        train_on_epsp(net, data[rng.permutation(data.shape[0])], rng)
    snn = np.array([np.argmax(responsibility(net, y)) for y in data])
    g = GMMState(data[order[:3]].astype(float), np.full(3, 1 / 3))
    for _ in range(30):
        g = gmm_em_step(g, data)
    gmm = np.array([np.argmax(gmm_responsibility(g, y)) for y in data])
    return agreement(snn, gmm, 3)


# ------------------------------------------------------------ HMM products

mpmath.mp.dps = 50


def mp_softmax_max(weights, bias, y):
    u = [mpmath.mpf(float(b)) + mpmath.fsum(mpmath.mpf(float(w)) * int(v) for w, v in zip(row, y))
         for row, b in zip(weights, bias)]
    z = mpmath.fsum(mpmath.e**x for x in u)
    return max(mpmath.e**x for x in u) / z


def mp_peak(weights, bias, y):
    u = [mpmath.mpf(float(b)) + mpmath.fsum(mpmath.mpf(float(w)) * int(v) for w, v in zip(row, y))
         for row, b in zip(weights, bias)]
    return mpmath.e ** (max(u) - (len(y) + 1))


def mp_window(spikes, neuron, t, sigma):
    return int(any(spikes[neuron][s] for s in range(max(0, t - sigma), t + 1)))


def mp_emission(net, y, mode):
    fn = mp_softmax_max if mode == "normalized" else mp_peak
    return fn(net.weights.tolist(), net.bias.tolist(), y)


def mp_sequence_prob(model, segments, sigma, self_loops):
    """Direct product: Gamma * prod a_adv * prod_frames [a_self] * prod_t Pr_snn.

    ``segments[p]`` is the list of spike matrices (neurons x steps) of
    state ``p``.
    """
    prob = mpmath.e ** mpmath.mpf(model.log_prior) * mpmath.mpf(model.initial_prob)
    prob *= mpmath.mpf(model.advance_prob) ** (len(segments) - 1)
    for net, rasters in zip(model.states, segments):
        for spikes in rasters:
            if self_loops:
                prob *= mpmath.mpf(model.self_prob)
            n, steps = len(spikes), len(spikes[0])
            for t in range(steps):
                y = [mp_window(spikes, i, t, sigma) for i in range(n)]
                prob *= mp_emission(net, y, model.emission)
    return prob
