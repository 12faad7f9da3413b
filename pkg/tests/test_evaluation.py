import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csvqa.evaluation import (
    codeword,
    fit_logistic,
    hist_distances,
    histograms,
    kendall,
    logistic5,
    pearson,
    significance,
    spearman,
)
from csvqa.transport import transport


# -- oracles ---------------------------------------------------------------


def pearson_oracle(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def average_ranks(x):
    return [sum(v < a for v in x) + (sum(v == a for v in x) + 1) / 2 for a in x]


def kendall_oracle(x, y):
    n = len(x)
    conc = disc = 0
    for i in range(n):
        for j in range(i + 1, n):
            s = (x[i] - x[j]) * (y[i] - y[j])
            conc += s > 0
            disc += s < 0
    n0 = n * (n - 1) // 2
    tx = sum(t * (t - 1) // 2 for t in Counter(x).values())
    ty = sum(t * (t - 1) // 2 for t in Counter(y).values())
    return (conc - disc) / math.sqrt((n0 - tx) * (n0 - ty))


def random_vectors(rng, n, ties):
    if ties:
        return rng.integers(0, 6, n).astype(float), rng.integers(0, 6, n).astype(float)
    return rng.normal(size=n), rng.normal(size=n)


# -- correlations ----------------------------------------------------------


def test_pearson_trivial(rng):
    x = rng.normal(size=20)
    assert pearson(x, x) == pytest.approx(1.0, abs=1e-15)
    assert pearson(x, -x) == pytest.approx(-1.0, abs=1e-15)


def test_pearson_oracle(rng):
    for _ in range(50):
        x, y = rng.normal(size=30), rng.normal(size=30)
        assert pearson(x, y) == pytest.approx(pearson_oracle(list(x), list(y)), abs=1e-12)


def test_pearson_zero_variance():
    with pytest.raises(ValueError):
        pearson([1, 1, 1], [1, 2, 3])


def test_spearman_trivial(rng):
    assert spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    x = rng.normal(size=40)
    assert spearman(x, np.exp(3 * x) + 7) == 1.0


@pytest.mark.parametrize("ties", [False, True])
def test_spearman_average_rank_oracle(rng, ties):
    for _ in range(30):
        x, y = random_vectors(rng, 25, ties)
        expected = pearson(average_ranks(list(x)), average_ranks(list(y)))
        assert spearman(x, y) == expected


def test_kendall_trivial():
    assert kendall([1, 2, 3], [1, 2, 3]) == 1.0
    assert kendall([1, 2, 3], [1, 3, 2]) == pytest.approx(1 / 3, abs=1e-15)
    with pytest.raises(ValueError):
        kendall([2, 2, 2], [1, 2, 3])


@pytest.mark.parametrize("ties", [False, True])
def test_kendall_pair_oracle(rng, ties):
    for _ in range(30):
        x, y = random_vectors(rng, 30, ties)
        assert kendall(x, y) == kendall_oracle(list(x), list(y))


def test_kendall_spans_several_chunks(rng):
    x, y = random_vectors(rng, 1500, True)
    assert kendall(x, y) == kendall_oracle(list(x), list(y))


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_rank_coefficients_invariant_to_monotone_maps(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=25), rng.normal(size=25)
    fx, gy = np.exp(x), 3 * y**3 + 1
    assert spearman(fx, gy) == spearman(x, y)
    assert kendall(fx, gy) == kendall(x, y)


# -- logistic regression ---------------------------------------------------


def test_fit_affine_mos(rng):
    x = rng.uniform(0.5, 1.0, 60)
    fit = fit_logistic(x, 40 * x + 3)
    assert fit.plcc >= 0.999999


def test_fit_noiseless_logistic(rng):
    x = rng.uniform(0, 1, 200)
    y = logistic5(x, 80, 12, 0.5, 5, 40)
    fit = fit_logistic(x, y)
    assert fit.plcc >= 0.999
    assert np.allclose(fit(x), fit.mapped)


def test_fit_decreasing_keeps_rank_coefficients(rng):
    x = rng.uniform(0, 1, 80)
    y = 100 - 60 * x**2 + rng.normal(0, 2, 80)
    fit = fit_logistic(x, y)
    assert fit.plcc >= abs(pearson(x, y)) - 1e-6
    assert spearman(fit.mapped, y) == pytest.approx(abs(spearman(x, y)), abs=1e-12)


def test_fit_never_below_raw_plcc(rng):
    for _ in range(15):
        x = rng.normal(size=40)
        y = np.tanh(2 * x) * rng.uniform(-1, 1) + rng.normal(0, rng.uniform(0.05, 1), 40)
        assert fit_logistic(x, y).plcc >= abs(pearson(x, y)) - 1e-6


def test_fit_affine_invariance(rng):
    x = rng.uniform(0.7, 1.0, 100)
    y = logistic5(x, 60, 25, 0.85, 10, 30) + rng.normal(0, 3, 100)
    base = fit_logistic(x, y).plcc
    for a, b in [(3.0, 5.0), (0.01, -2.0), (250.0, 1e3)]:
        assert fit_logistic(a * x + b, y).plcc == pytest.approx(base, abs=1e-6)


def test_fit_printed_form(rng):
    x = rng.uniform(0, 1, 50)
    y = 10 * x + rng.normal(0, 0.5, 50)
    fit = fit_logistic(x, y, form="printed")
    assert fit.form == "printed"
    assert np.all(np.isfinite(fit.mapped))
    assert fit.plcc >= abs(pearson(x, y)) - 1e-6


def test_fit_rejects_degenerate(rng):
    with pytest.raises(ValueError):
        fit_logistic(np.ones(20), rng.normal(size=20))
    with pytest.raises(ValueError):
        fit_logistic(rng.normal(size=5), rng.normal(size=5))


# -- significance ----------------------------------------------------------


def test_significance_equal_is_zero():
    assert significance(0.8, 100, 0.8, 100) == 0


def test_significance_hand_computed():
    z = (math.atanh(0.99) - math.atanh(0.5)) / math.sqrt(2 / 776)
    assert z > 1.96
    assert significance(0.99, 779, 0.50, 779) == 1


def test_significance_threshold():
    # |z1 - z2| / sigma just below and above 1.96 with n = 103 (sigma = sqrt(2/100))
    sigma = math.sqrt(2 / 100)
    r2 = 0.5
    below = math.tanh(math.atanh(r2) + 1.95 * sigma)
    above = math.tanh(math.atanh(r2) + 1.97 * sigma)
    assert significance(below, 103, r2, 103) == 0
    assert significance(above, 103, r2, 103) == 1


def test_significance_symmetric(rng):
    for _ in range(50):
        r1, r2 = rng.uniform(-0.99, 0.99, 2)
        n1, n2 = rng.integers(4, 500, 2)
        assert significance(r1, n1, r2, n2) == significance(r2, n2, r1, n1)


def test_significance_perfect_r():
    with pytest.raises(ValueError):
        significance(1.0, 10, 0.5, 10)


def test_codeword():
    a = {"plcc": 0.95, "scc": 0.9, "kcc": 0.8}
    assert codeword(a, a, 500, 500) == "000"
    b = {"plcc": 0.5, "scc": 0.9, "kcc": 0.8}
    assert codeword(a, b, 500, 500) == "100"


# -- histogram distances ---------------------------------------------------


def hist_oracle(a, b, bins=10, eps=1e-10):
    lo, hi = min(min(a), min(b)), max(max(a), max(b))
    width = (hi - lo) / bins

    def hist(v):
        h = [0] * bins
        for x in v:
            h[min(int((x - lo) / width), bins - 1)] += 1
        return [c / len(v) for c in h]

    p, q = hist(a), hist(b)
    emd, cp, cq = 0.0, 0.0, 0.0
    for i in range(bins):
        cp += p[i]
        cq += q[i]
        emd += abs(cp - cq) * width
    ps = [(x + eps) / (1 + bins * eps) for x in p]
    qs = [(x + eps) / (1 + bins * eps) for x in q]
    kl = sum(x * math.log(x / y) for x, y in zip(ps, qs))
    m = [(x + y) / 2 for x, y in zip(ps, qs)]
    js = 0.5 * sum(x * math.log(x / z) for x, z in zip(ps, m)) + 0.5 * sum(
        y * math.log(y / z) for y, z in zip(qs, m))
    hi_d = 1 - sum(min(x, y) for x, y in zip(p, q))
    l2 = math.sqrt(sum((x - y) ** 2 for x, y in zip(p, q)))
    return dict(emd=emd, kl=kl, js=js, hi=hi_d, l2=l2)


def test_hist_identical_is_zero(rng):
    a = rng.normal(size=100)
    d = hist_distances(a, a)
    assert all(abs(v) < 1e-15 for v in d.to_dict().values())


def test_hist_disjoint():
    d = hist_distances([0.0, 0.1, 0.2], [5.0, 5.1, 5.2])
    assert d.hi == pytest.approx(1.0, abs=1e-15)
    assert d.js <= math.log(2)


def test_hist_oracle(rng):
    for _ in range(20):
        a, b = rng.normal(size=200), rng.normal(0.5, 1.3, 150)
        ours = hist_distances(a, b).to_dict()
        for key, value in hist_oracle(list(a), list(b)).items():
            assert ours[key] == pytest.approx(value, abs=1e-9), key


def test_hist_emd_matches_transport_solver(rng):
    a, b = rng.normal(size=300), rng.normal(1, 0.7, 300)
    p, q, edges = histograms(a, b)
    width = edges[1] - edges[0]
    centers = np.arange(len(p))
    ground = np.abs(centers[:, None] - centers[None, :]) * width
    assert hist_distances(a, b).emd == pytest.approx(transport(p, q, ground)[0], abs=1e-9)


def test_hist_invariants(rng):
    for _ in range(20):
        d = hist_distances(rng.normal(size=50), rng.uniform(-2, 2, 70))
        assert min(d.to_dict().values()) >= 0
        assert d.js <= math.log(2) and 0 <= d.hi <= 1


def test_hist_bins_validation():
    with pytest.raises(ValueError):
        hist_distances([1.0, 2.0], [1.0, 2.0], bins=1)
