"""Validation statistics: logistic mapping, correlations, significance, histogram distances."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special, stats

MIN_FIT_ITEMS = 8
COEFFICIENTS = ("plcc", "scc", "kcc")


def _vectors(x, y, min_n: int = 2):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < min_n:
        raise ValueError(f"need at least {min_n} items, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("scores must be finite")
    return x, y


# -- correlation coefficients ---------------------------------------------


def pearson(x, y) -> float:
    """Sample Pearson linear correlation coefficient."""
    x, y = _vectors(x, y)
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ValueError("pearson: zero variance input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def spearman(x, y) -> float:
    """Spearman rank correlation; ties receive average ranks."""
    x, y = _vectors(x, y)
    rx, ry = stats.rankdata(x), stats.rankdata(y)
    if np.all(rx == rx[0]) or np.all(ry == ry[0]):
        raise ValueError("spearman: zero rank variance")
    return pearson(rx, ry)


def _sign_pair_counts(x, y, chunk: int = 1024):
    """Integer pair counts over i < j: sum sign(dx)*sign(dy), untied-x pairs, untied-y pairs."""
    n = x.size
    s = nx = ny = 0
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        sx = np.sign(x[start:stop, None] - x[None, :]).astype(np.int8)
        sy = np.sign(y[start:stop, None] - y[None, :]).astype(np.int8)
        upper = np.arange(start, stop)[:, None] < np.arange(n)[None, :]
        s += int((sx.astype(np.int64) * sy)[upper].sum())
        nx += int(np.count_nonzero(sx[upper]))
        ny += int(np.count_nonzero(sy[upper]))
    return s, nx, ny


def kendall(x, y) -> float:
    """Kendall tau-b (tie corrected)."""
    x, y = _vectors(x, y)
    s, nx, ny = _sign_pair_counts(x, y)
    if nx == 0 or ny == 0:
        raise ValueError("kendall: all pairs tied")
    return s / math.sqrt(nx * ny)


def correlations(objective, subjective) -> dict:
    return {
        "plcc": pearson(objective, subjective),
        "scc": spearman(objective, subjective),
        "kcc": kendall(objective, subjective),
    }


# -- nonlinear mapping -----------------------------------------------------


def logistic5(s0, b1, b2, b3, b4, b5):
    """Five-parameter logistic with linear term."""
    return b1 * (0.5 - special.expit(-b2 * (s0 - b3))) + b4 * s0 + b5


def logistic5_printed(s0, b1, b2, b3, b4, b5):
    """Variant with ``1 - 1/(2 + exp(.))`` in place of ``1/2 - 1/(1 + exp(.))``."""
    z = np.clip(b2 * (s0 - b3), -700.0, 700.0)
    return b1 * (1.0 - 1.0 / (2.0 + np.exp(z))) + b4 * s0 + b5


LOGISTIC_FORMS = {"standard": logistic5, "printed": logistic5_printed}


@dataclass
class RegressionParams:
    betas: tuple
    plcc: float
    mapped: np.ndarray = field(repr=False)
    form: str = "standard"

    def __call__(self, s0):
        return LOGISTIC_FORMS[self.form](np.asarray(s0, dtype=np.float64), *self.betas)

    def to_dict(self) -> dict:
        return {"form": self.form, "betas": [float(b) for b in self.betas], "plcc": self.plcc}


def fit_logistic(
    objective,
    subjective,
    form: str = "standard",
    restarts: int = 5,
    max_iter: int = 2000,
    tol: float = 1e-10,
) -> RegressionParams:
    """Least-squares fit of the logistic mapping from objective to subjective scores.

    Nelder-Mead from the moment-based initial point (and its mirror for
    decreasing relations), restarted from the incumbent until the SSE gain
    drops below ``tol``. The pure linear member of the family is kept as a
    fallback so the fitted PLCC never falls below the raw one.
    """
    x, y = _vectors(objective, subjective, MIN_FIT_ITEMS)
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("fit_logistic: degenerate (constant) input")
    f = LOGISTIC_FORMS[form]
    # fit in standardized coordinates so the result is equivariant under affine rescaling
    mx, sx, my, sy = x.mean(), x.std(), y.mean(), y.std()
    z, w = (x - mx) / sx, (y - my) / sy

    def sse(c):
        with np.errstate(over="ignore", invalid="ignore"):
            r = f(z, *c) - w
        v = float(r @ r)
        return v if math.isfinite(v) else math.inf

    init = np.array([np.ptp(w), 1.0, 0.0, 0.0, 0.0])
    mirrored = np.array([np.ptp(w), -1.0, 0.0, 0.0, 0.0])
    slope, intercept = np.polyfit(z, w, 1)
    linear = np.array([0.0, 1.0, 0.0, slope, intercept])

    best_c, best_sse = linear, sse(linear)
    for start in (init, mirrored, linear):
        c, cur = start, sse(start)
        for _ in range(restarts):
            res = optimize.minimize(
                sse, c, method="Nelder-Mead",
                options={"maxiter": max_iter, "xatol": 1e-12, "fatol": tol, "adaptive": True},
            )
            gain = cur - res.fun
            if res.fun < cur:
                c, cur = res.x, res.fun
            if gain < tol:
                break
        if cur < best_sse:
            best_c, best_sse = c, cur

    def to_raw(c):
        c1, c2, c3, c4, c5 = c
        return np.array([
            sy * c1, c2 / sx, mx + sx * c3, sy * c4 / sx, sy * (c5 - c4 * mx / sx) + my,
        ])

    best_beta, linear = to_raw(best_c), to_raw(linear)
    mapped = f(x, *best_beta)
    plcc = _safe_pearson(mapped, y)
    lin_plcc = abs(pearson(x, y))
    if plcc < lin_plcc:
        best_beta, mapped, plcc = linear, f(x, *linear), lin_plcc
    return RegressionParams(tuple(float(b) for b in best_beta), plcc, mapped, form)


def _safe_pearson(x, y) -> float:
    try:
        return pearson(x, y)
    except ValueError:
        return -1.0


# -- significance ----------------------------------------------------------


def significance(r1: float, n1: int, r2: float, n2: int, alpha: float = 0.05) -> int:
    """1 if two correlation coefficients differ significantly (Fisher z, two-tailed)."""
    if abs(r1) >= 1 or abs(r2) >= 1:
        raise ValueError("significance: |r| must be < 1")
    if n1 < 4 or n2 < 4:
        raise ValueError("significance: need n >= 4")
    z = abs(math.atanh(r1) - math.atanh(r2)) / math.sqrt(1.0 / (n1 - 3) + 1.0 / (n2 - 3))
    return int(z > stats.norm.ppf(1.0 - alpha / 2.0))


def codeword(a: dict, b: dict, n_a: int, n_b: int, coefficients=COEFFICIENTS, alpha=0.05) -> str:
    """Significance digits for each coefficient, e.g. ``"010"``.

    Equal coefficients give 0 directly; perfect correlations are pulled just
    inside (-1, 1) so the z-transform stays finite.
    """
    lim = 1.0 - 1e-12
    digits = []
    for c in coefficients:
        ra, rb = a[c], b[c]
        if ra == rb:
            digits.append("0")
            continue
        ra, rb = max(-lim, min(lim, ra)), max(-lim, min(lim, rb))
        digits.append(str(significance(ra, n_a, rb, n_b, alpha)))
    return "".join(digits)


# -- histogram distances ---------------------------------------------------


@dataclass
class HistDistances:
    emd: float
    kl: float
    js: float
    hi: float
    l2: float

    def to_dict(self) -> dict:
        return {"emd": self.emd, "kl": self.kl, "js": self.js, "hi": self.hi, "l2": self.l2}


def histograms(a, b, bins: int = 10):
    """Normalized histograms on shared equal-width bins over the joint range."""
    if bins < 2:
        raise ValueError("need at least 2 bins")
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("histogram inputs must be non-empty")
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    p = np.histogram(a, edges)[0] / a.size
    q = np.histogram(b, edges)[0] / b.size
    return p, q, edges


def _kl(p, q) -> float:
    return float(np.sum(p * np.log(p / q)))


def hist_distances(a, b, bins: int = 10, eps: float = 1e-10) -> HistDistances:
    p, q, edges = histograms(a, b, bins)
    width = edges[1] - edges[0]
    ps = (p + eps) / (p + eps).sum()
    qs = (q + eps) / (q + eps).sum()
    mid = 0.5 * (ps + qs)
    return HistDistances(
        emd=float(np.sum(np.abs(np.cumsum(p) - np.cumsum(q))) * width),
        kl=_kl(ps, qs),
        js=0.5 * _kl(ps, mid) + 0.5 * _kl(qs, mid),
        hi=float(1.0 - np.minimum(p, q).sum()),
        l2=float(np.sqrt(np.sum((p - q) ** 2))),
    )


# -- aggregate -------------------------------------------------------------


def summarize(objective, subjective, reg: RegressionParams, bins: int = 10) -> dict:
    """Correlations and histogram distances given an already fitted mapping."""
    x, y = _vectors(objective, subjective)
    mapped = reg(x)
    return {
        "n": int(x.size),
        "regression": reg.to_dict(),
        "raw_plcc": pearson(x, y),
        "plcc": _safe_pearson(mapped, y),
        "scc": spearman(x, y),
        "kcc": kendall(x, y),
        "hist": hist_distances(y, mapped, bins).to_dict(),
    }


def evaluate_scores(objective, subjective, form: str = "standard", bins: int = 10) -> dict:
    """Fit the mapping on this score set, then summarize it."""
    reg = fit_logistic(objective, subjective, form=form)
    return summarize(objective, subjective, reg, bins)
