import math

import numpy as np
import pytest

from hqnn_dse.dataprep import TsneConfig, effective_perplexity, separable_spec, synth_dataset, tsne_compare
from hqnn_dse.dataprep.tsne import conditional_affinities
from hqnn_dse.errors import ComparabilityError


def test_perplexity_rule():
    assert effective_perplexity(16) == 4
    assert effective_perplexity(400) == 30
    assert effective_perplexity(16, TsneConfig(perplexity=7)) == 7


def test_affinity_entropy_matches_perplexity():
    x = np.random.default_rng(0).normal(size=(80, 5))
    P, h = conditional_affinities(x, 12.0)
    np.testing.assert_allclose(P.sum(axis=1), 1)
    assert np.all(np.diag(P) == 0)
    assert np.max(np.abs(h - math.log(12.0))) < 1e-3


def test_duplicate_datasets_share_centroid():
    a = synth_dataset(separable_spec(6), 40, seed=1)
    r = tsne_compare([a, a], TsneConfig(iterations=300))
    assert r.distances[0, 1] < 1e-6 * r.spread
    assert r.spread > 0


def test_shifted_triple_ordering():
    spec = separable_spec(6)
    a = synth_dataset(spec, 50, seed=1, name="A")
    b = synth_dataset(spec, 50, seed=2, name="B")
    c = synth_dataset(separable_spec(6, offset=4.0), 50, seed=3, name="C")
    r = tsne_compare([a, b, c], TsneConfig(iterations=300))
    d = r.distances
    assert d[0, 1] < d[0, 2] and d[0, 1] < d[1, 2]
    np.testing.assert_allclose(d, d.T)
    assert np.all(np.diag(d) == 0)


def test_matrix_inputs_and_errors():
    rng = np.random.default_rng(0)
    with pytest.raises(ComparabilityError):
        tsne_compare([rng.normal(size=(3, 2)), rng.normal(size=(10, 2))])
    with pytest.raises(ComparabilityError):
        tsne_compare([rng.normal(size=(10, 2))])
    with pytest.raises(ComparabilityError):
        tsne_compare([rng.normal(size=(10, 2)), rng.normal(size=(10, 3))])
    r = tsne_compare([rng.normal(size=(10, 2)), rng.normal(size=(10, 2)) + 3], TsneConfig(iterations=200))
    assert r.embedding.shape == (20, 2) and r.perplexity == 5.0
