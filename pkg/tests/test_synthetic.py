import numpy as np
import pytest

from hmmsnn.errors import InvalidInputError
from hmmsnn.synthetic import DEFAULT_CLASSES, LABELS, SubPatternSpec, make_sequence, make_subpattern
from hmmsnn.wordsynth import WORDS, make_corpus, synthesize_word


def test_default_classes():
    assert DEFAULT_CLASSES == ("ABCD", "DCBA", "ABDC", "BACD")


def test_informative_ranges_partition_neurons():
    ranges = [set(SubPatternSpec(c).informative_range) for c in LABELS]
    assert ranges[0] == set(range(20))
    assert set().union(*ranges) == set(range(80))
    assert sum(len(r) for r in ranges) == 80


def test_rates_vector():
    r = SubPatternSpec("C").rates()
    assert np.all(r[40:60] == 340) and np.sum(r == 50) == 60


def test_mean_spike_count():
    p_info, p_bg = 1 - np.exp(-0.34), 1 - np.exp(-0.05)
    # 20 * 5.77 + 60 * 0.975; a background neuron averages 0.975 spikes,
    # slightly under its Poisson mean of 1.0
    expected = 20 * (20 * p_info) + 60 * (20 * p_bg)
    assert expected == pytest.approx(173.82, abs=0.01)
    counts = [make_subpattern(SubPatternSpec("A"), s).spikes.sum() for s in range(1000)]
    # per-raster variance: sum of independent Bernoulli variances
    var = 400 * p_info * (1 - p_info) + 1200 * p_bg * (1 - p_bg)
    assert abs(np.mean(counts) - expected) <= 3 * np.sqrt(var / 1000)


def test_label_a_is_informative_on_first_block():
    tot = sum(make_subpattern(SubPatternSpec("A"), s).spikes for s in range(200))
    per_neuron = tot.sum(axis=1) / 200
    assert per_neuron[:20].min() > per_neuron[20:].max()


def test_seeds_change_rasters():
    spec = SubPatternSpec("B")
    assert make_subpattern(spec, 1) != make_subpattern(spec, 2)
    assert make_subpattern(spec, 1) == make_subpattern(spec, 1)


def test_sequences():
    seq = make_sequence("ABCD", 0)
    assert len(seq) == 4 and sum(r.num_steps for r in seq) == 80
    assert len(make_sequence("A", 0)) == 1
    abab = make_sequence("ABAB", 3)
    assert abab[0] != abab[2]


@pytest.mark.parametrize("bad", ["", "ABXE", "abcd"])
def test_invalid_labels(bad):
    with pytest.raises(InvalidInputError):
        make_sequence(bad, 0)


def test_word_synthesizer():
    a = synthesize_word("zero", 1)
    assert a.sample_rate == 8000 and len(a) > 160 and np.abs(a.samples).max() <= 1
    assert np.array_equal(a.samples, synthesize_word("zero", 1).samples)
    corpus = make_corpus(["one", "nine"], 3, seed=0)
    assert [w for w, _ in corpus] == ["one"] * 3 + ["nine"] * 3
    assert set(WORDS) >= {"zero", "one", "four", "eight", "nine"}
    with pytest.raises(InvalidInputError):
        synthesize_word("seven")
