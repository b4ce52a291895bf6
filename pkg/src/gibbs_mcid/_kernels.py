"""Hot numeric kernels: numba-jitted implementations with pure-numpy fallbacks.

Everything compute-bound lives here: empirical-risk minimization over the
candidate boundaries, bootstrap resampling loops, the piecewise exact
posterior (segment weights + inverse-CDF sampling), the bootstrap coverage
loop used by loss-scale calibration, and the random-walk Metropolis chain.

Backend selection:
  * env var GIBBS_MCID_BACKEND = "numba" | "numpy" | "auto" (default auto);
  * set_backend() switches at runtime (used by tests and the benchmark);
  * if numba is not importable the numpy path is used automatically.

Kernels never draw random numbers themselves. Callers pass pre-drawn
uniform/normal arrays from a seeded numpy Generator, so the two backends
produce identical results (bit-identical for all integer/comparison logic;
normal-prior quantile inversion may differ in the last ulp because numba
uses libm erfc while the numpy path uses scipy's cephes ndtr/ndtri).

Boundary convention used throughout: for x sorted ascending, boundary b in
0..n means "the b leftmost points are classified -1, the rest +1", which is
the classification induced by any threshold in (x[b-1], x[b]].  Boundary b
is attainable by a threshold iff b == 0 or x[b-1] < x[b]; b == n is outside
the observed range and excluded (support restriction).
"""

from __future__ import annotations

import math
import os
import warnings

import numpy as np
from scipy import special as _sp

_ENV_FLAG = os.environ.get("GIBBS_MCID_BACKEND", "auto").strip().lower() or "auto"

HAVE_NUMBA = False
if _ENV_FLAG in ("auto", "numba"):
    try:
        from numba import njit, prange

        HAVE_NUMBA = True
    except ImportError:
        if _ENV_FLAG == "numba":
            warnings.warn(
                "GIBBS_MCID_BACKEND=numba but numba is not importable; "
                "falling back to the pure-numpy kernels",
                RuntimeWarning,
            )
elif _ENV_FLAG != "numpy":
    warnings.warn(
        f"unknown GIBBS_MCID_BACKEND={_ENV_FLAG!r}; using auto", RuntimeWarning
    )
    try:
        from numba import njit, prange

        HAVE_NUMBA = True
    except ImportError:
        pass

_ACTIVE = "numba" if (HAVE_NUMBA and _ENV_FLAG != "numpy") else "numpy"

# quantile positions use np.quantile's default linear interpolation; the
# in-kernel copy below must stay in sync
_SQRT1_2 = 0.7071067811865476


def active_backend() -> str:
    return _ACTIVE


def available_backends() -> tuple[str, ...]:
    return ("numba", "numpy") if HAVE_NUMBA else ("numpy",)


def set_backend(name: str) -> None:
    """Switch the kernel backend at runtime ("numba" or "numpy")."""
    global _ACTIVE
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    _ACTIVE = name


def set_threads(k: int) -> None:
    """Limit numba's parallel kernels to k threads (no-op on the numpy path)."""
    if HAVE_NUMBA and k >= 1:
        import numba

        numba.set_num_threads(min(k, numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------


def _np_misclass_counts(ys):
    # M(b) for b=0..n given labels sorted by x
    n = ys.shape[0]
    pos = np.cumsum(ys == 1)
    nneg = n - pos[-1] if n else 0
    M = np.empty(n + 1, np.int64)
    M[0] = nneg
    M[1:] = 2 * pos - np.arange(1, n + 1) + nneg
    return M


def _np_argmin_theta(xs, ys):
    """Leftmost-interval-midpoint minimizer of the empirical 0-1 risk.

    xs, ys sorted by xs.  Returns (theta_hat, min_misclassified_count).
    """
    n = xs.shape[0]
    M = _np_misclass_counts(ys)[:n]
    valid = np.ones(n, bool)
    valid[1:] = xs[1:] > xs[:-1]
    Mv = np.where(valid, M, n + 1)
    best = int(Mv.min())
    bstart = int(np.argmax(Mv == best))
    e = bstart
    # extend through x-ties (empty threshold intervals) and tied-min boundaries
    while e + 1 < n and (xs[e] >= xs[e + 1] or M[e + 1] == best):
        e += 1
    if bstart == 0:
        th = xs[0]
    else:
        th = 0.5 * (xs[bstart - 1] + xs[e])
    th = min(max(th, xs[0]), xs[-1])
    return float(th), best


def _np_bootstrap_thetas(x, y, idx):
    """Risk minimizers for each resample row of idx, vectorized across rows."""
    B, n = idx.shape
    out = np.empty(B)
    chunk = max(1, int(4_000_000 // max(n, 1)))
    pos_idx = np.arange(n)
    for s in range(0, B, chunk):
        sl = idx[s : s + chunk]
        xv = x[sl]
        yv = y[sl]
        o = np.argsort(xv, axis=1)
        xs = np.take_along_axis(xv, o, axis=1)
        ys = np.take_along_axis(yv, o, axis=1)
        nb = xs.shape[0]
        pos = np.cumsum(ys == 1, axis=1)
        nneg = (n - pos[:, -1])[:, None]
        M = 2 * pos - (pos_idx + 1)[None, :] + nneg
        M = np.concatenate([nneg, M], axis=1)[:, :n]
        valid = np.ones((nb, n), bool)
        valid[:, 1:] = xs[:, 1:] > xs[:, :-1]
        Mv = np.where(valid, M, n + 1)
        best = Mv.min(axis=1)
        bstart = np.argmax(Mv == best[:, None], axis=1)
        ok = (~valid) | (M == best[:, None])
        notok_after = (~ok) & (pos_idx[None, :] > bstart[:, None])
        stop = np.where(notok_after.any(axis=1), np.argmax(notok_after, axis=1), n)
        rows = np.arange(nb)
        hi = xs[rows, stop - 1]
        lo = xs[rows, np.maximum(bstart - 1, 0)]
        th = np.where(bstart == 0, xs[:, 0], 0.5 * (lo + hi))
        out[s : s + chunk] = np.clip(th, xs[:, 0], xs[:, -1])
    return out


def _np_posterior_segments(xs, ys):
    """Segment edges (distinct x) and per-segment misclassification counts."""
    n = xs.shape[0]
    M = _np_misclass_counts(ys)
    keep = np.ones(n, bool)
    keep[1:] = xs[1:] > xs[:-1]
    edges = xs[keep]
    first = np.flatnonzero(keep)
    counts = M[first[1:]] if len(first) > 1 else np.empty(0, np.int64)
    return edges, counts


def _np_segment_log_weights(edges, counts, omega, prior_code, pa, pb):
    """Unnormalized then log-sum-exp-normalized segment log masses.

    prior_code 0: flat on [edges[0], edges[-1]]; 1: normal(pa, pb).
    """
    with np.errstate(divide="ignore"):
        if prior_code == 0:
            logprior = np.log(np.diff(edges))
        else:
            cdf = _sp.ndtr((edges - pa) / pb)
            logprior = np.log(np.maximum(np.diff(cdf), 0.0))
    logw = -omega * counts.astype(np.float64) + logprior
    m = np.max(logw)
    logz = m + np.log(np.sum(np.exp(logw - m)))
    return logw - logz


def _np_piecewise_sample(edges, cumw, prior_code, pa, pb, u_seg, u_pos):
    k = len(edges)
    seg = np.minimum(np.searchsorted(cumw, u_seg), k - 2)
    a = edges[seg]
    b = edges[seg + 1]
    if prior_code == 0:
        return a + u_pos * (b - a)
    ca = _sp.ndtr((a - pa) / pb)
    cb = _sp.ndtr((b - pa) / pb)
    t = ca + u_pos * (cb - ca)
    return pa + pb * _sp.ndtri(t)


def _np_quantile_pair(draws_sorted, level):
    m = draws_sorted.shape[0]
    out = np.empty(2)
    for j, p in enumerate(((1.0 - level) / 2.0, (1.0 + level) / 2.0)):
        h = p * (m - 1)
        i = int(h)
        if i >= m - 1:
            out[j] = draws_sorted[m - 1]
        else:
            out[j] = draws_sorted[i] + (h - i) * (draws_sorted[i + 1] - draws_sorted[i])
    return out


def _np_coverage_count(x, y, omega, prior_code, pa, pb, idx, u_seg, u_pos, level, theta_ref):
    B = idx.shape[0]
    covered = 0
    for b in range(B):
        xv = x[idx[b]]
        yv = y[idx[b]]
        o = np.argsort(xv)
        xs = xv[o]
        ys = yv[o]
        edges, counts = _np_posterior_segments(xs, ys)
        if len(edges) < 2:
            covered += abs(theta_ref - edges[0]) == 0.0
            continue
        logw = _np_segment_log_weights(edges, counts, omega, prior_code, pa, pb)
        cumw = np.cumsum(np.exp(logw))
        draws = _np_piecewise_sample(edges, cumw, prior_code, pa, pb, u_seg[b], u_pos[b])
        lo, hi = _np_quantile_pair(np.sort(draws), level)
        covered += int(lo <= theta_ref <= hi)
    return covered


def _np_metropolis_chain(xs, M, omega, prior_code, pa, pb, theta0, step, z, u):
    n = xs.shape[0]
    T = z.shape[0]
    out = np.empty(T)
    th = theta0
    b = int(np.searchsorted(xs, th))
    lk = -omega * M[b]
    if prior_code == 1:
        d = (th - pa) / pb
        lk -= 0.5 * d * d
    acc = 0
    lo, hi = xs[0], xs[-1]
    for t in range(T):
        thp = th + step * z[t]
        if lo <= thp <= hi:
            bp = int(np.searchsorted(xs, thp))
            lkp = -omega * M[bp]
            if prior_code == 1:
                d = (thp - pa) / pb
                lkp -= 0.5 * d * d
            if math.log(u[t]) < lkp - lk:
                th = thp
                lk = lkp
                acc += 1
        out[t] = th
    return out, acc


_NUMPY_IMPL = {
    "argmin_theta": _np_argmin_theta,
    "bootstrap_thetas": _np_bootstrap_thetas,
    "posterior_segments": _np_posterior_segments,
    "segment_log_weights": _np_segment_log_weights,
    "piecewise_sample": _np_piecewise_sample,
    "coverage_count": _np_coverage_count,
    "metropolis_chain": _np_metropolis_chain,
}


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _nb_misclass_counts(ys):
        n = ys.shape[0]
        M = np.empty(n + 1, np.int64)
        nneg = 0
        for i in range(n):
            if ys[i] < 0:
                nneg += 1
        M[0] = nneg
        c = nneg
        for b in range(1, n + 1):
            if ys[b - 1] > 0:
                c += 1
            else:
                c -= 1
            M[b] = c
        return M

    @njit(cache=True)
    def _nb_argmin_core(xs, ys):
        n = xs.shape[0]
        M = _nb_misclass_counts(ys)
        best = n + 1
        bstart = 0
        for b in range(n):
            if (b == 0 or xs[b - 1] < xs[b]) and M[b] < best:
                best = M[b]
                bstart = b
        e = bstart
        for b in range(bstart + 1, n):
            if xs[b - 1] >= xs[b] or M[b] == best:
                e = b
            else:
                break
        if bstart == 0:
            th = xs[0]
        else:
            th = 0.5 * (xs[bstart - 1] + xs[e])
        if th < xs[0]:
            th = xs[0]
        if th > xs[n - 1]:
            th = xs[n - 1]
        return th, best

    @njit(cache=True)
    def _nb_argmin_theta(xs, ys):
        th, best = _nb_argmin_core(xs, ys)
        return float(th), int(best)

    @njit(cache=True, parallel=True)
    def _nb_bootstrap_thetas(x, y, idx):
        B, n = idx.shape
        out = np.empty(B)
        for b in prange(B):
            xv = np.empty(n)
            yv = np.empty(n, np.int64)
            for i in range(n):
                j = idx[b, i]
                xv[i] = x[j]
                yv[i] = y[j]
            o = np.argsort(xv)
            xs = xv[o]
            ys = yv[o]
            th, _ = _nb_argmin_core(xs, ys)
            out[b] = th
        return out

    @njit(cache=True)
    def _nb_posterior_segments(xs, ys):
        n = xs.shape[0]
        M = _nb_misclass_counts(ys)
        k = 1
        for i in range(1, n):
            if xs[i] > xs[i - 1]:
                k += 1
        edges = np.empty(k)
        counts = np.empty(k - 1, np.int64)
        edges[0] = xs[0]
        ki = 0
        for i in range(1, n):
            if xs[i] > xs[i - 1]:
                ki += 1
                edges[ki] = xs[i]
                counts[ki - 1] = M[i]
        return edges, counts

    @njit(cache=True)
    def _nb_normal_cdf(z):
        return 0.5 * math.erfc(-z * _SQRT1_2)

    @njit(cache=True)
    def _nb_normal_ppf(p):
        # Wichura's AS 241 (PPND16): double-precision normal quantile
        q = p - 0.5
        if abs(q) <= 0.425:
            r = 0.180625 - q * q
            num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
            den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
            return q * num / den
        if q < 0.0:
            r = p
        else:
            r = 1.0 - p
        if r <= 0.0:
            return -np.inf if q < 0.0 else np.inf
        r = math.sqrt(-math.log(r))
        if r <= 5.0:
            r = r - 1.6
            num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
            den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
        else:
            r = r - 5.0
            num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
            den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
        val = num / den
        return -val if q < 0.0 else val

    @njit(cache=True)
    def _nb_segment_log_weights(edges, counts, omega, prior_code, pa, pb):
        k = edges.shape[0]
        logw = np.empty(k - 1)
        for j in range(k - 1):
            if prior_code == 0:
                mass = edges[j + 1] - edges[j]
            else:
                mass = _nb_normal_cdf((edges[j + 1] - pa) / pb) - _nb_normal_cdf(
                    (edges[j] - pa) / pb
                )
                if mass < 0.0:
                    mass = 0.0
            logw[j] = -omega * counts[j] + (math.log(mass) if mass > 0.0 else -np.inf)
        m = -np.inf
        for j in range(k - 1):
            if logw[j] > m:
                m = logw[j]
        s = 0.0
        for j in range(k - 1):
            s += math.exp(logw[j] - m)
        logz = m + math.log(s)
        for j in range(k - 1):
            logw[j] -= logz
        return logw

    @njit(cache=True)
    def _nb_piecewise_sample(edges, cumw, prior_code, pa, pb, u_seg, u_pos):
        k = edges.shape[0]
        m = u_seg.shape[0]
        out = np.empty(m)
        for i in range(m):
            seg = np.searchsorted(cumw, u_seg[i])
            if seg > k - 2:
                seg = k - 2
            a = edges[seg]
            b = edges[seg + 1]
            if prior_code == 0:
                out[i] = a + u_pos[i] * (b - a)
            else:
                ca = _nb_normal_cdf((a - pa) / pb)
                cb = _nb_normal_cdf((b - pa) / pb)
                t = ca + u_pos[i] * (cb - ca)
                v = pa + pb * _nb_normal_ppf(t)
                if v < a:
                    v = a
                if v > b:
                    v = b
                out[i] = v
        return out

    @njit(cache=True)
    def _nb_quantile_pair(d, level):
        m = d.shape[0]
        out = np.empty(2)
        pr = (1.0 - level) / 2.0
        for j in range(2):
            p = pr if j == 0 else 1.0 - pr
            h = p * (m - 1)
            i = int(h)
            if i >= m - 1:
                out[j] = d[m - 1]
            else:
                out[j] = d[i] + (h - i) * (d[i + 1] - d[i])
        return out

    @njit(cache=True, parallel=True)
    def _nb_coverage_count(x, y, omega, prior_code, pa, pb, idx, u_seg, u_pos, level, theta_ref):
        B, n = idx.shape
        covered = 0
        for b in prange(B):
            xv = np.empty(n)
            yv = np.empty(n, np.int64)
            for i in range(n):
                j = idx[b, i]
                xv[i] = x[j]
                yv[i] = y[j]
            o = np.argsort(xv)
            xs = xv[o]
            ys = yv[o]
            edges, counts = _nb_posterior_segments(xs, ys)
            if edges.shape[0] < 2:
                if theta_ref == edges[0]:
                    covered += 1
                continue
            logw = _nb_segment_log_weights(edges, counts, omega, prior_code, pa, pb)
            cumw = np.cumsum(np.exp(logw))
            draws = _nb_piecewise_sample(edges, cumw, prior_code, pa, pb, u_seg[b], u_pos[b])
            q = _nb_quantile_pair(np.sort(draws), level)
            if q[0] <= theta_ref <= q[1]:
                covered += 1
        return covered

    @njit(cache=True)
    def _nb_metropolis_chain(xs, M, omega, prior_code, pa, pb, theta0, step, z, u):
        n = xs.shape[0]
        T = z.shape[0]
        out = np.empty(T)
        th = theta0
        b = np.searchsorted(xs, th)
        lk = -omega * M[b]
        if prior_code == 1:
            d = (th - pa) / pb
            lk -= 0.5 * d * d
        acc = 0
        lo, hi = xs[0], xs[n - 1]
        for t in range(T):
            thp = th + step * z[t]
            if lo <= thp <= hi:
                bp = np.searchsorted(xs, thp)
                lkp = -omega * M[bp]
                if prior_code == 1:
                    d = (thp - pa) / pb
                    lkp -= 0.5 * d * d
                if math.log(u[t]) < lkp - lk:
                    th = thp
                    lk = lkp
                    acc += 1
            out[t] = th
        return out, acc

    def _nb_metropolis_wrap(xs, M, omega, prior_code, pa, pb, theta0, step, z, u):
        out, acc = _nb_metropolis_chain(xs, M, omega, prior_code, pa, pb, theta0, step, z, u)
        return out, int(acc)

    _NUMBA_IMPL = {
        "argmin_theta": _nb_argmin_theta,
        "bootstrap_thetas": _nb_bootstrap_thetas,
        "posterior_segments": _nb_posterior_segments,
        "segment_log_weights": _nb_segment_log_weights,
        "piecewise_sample": _nb_piecewise_sample,
        "coverage_count": _nb_coverage_count,
        "metropolis_chain": _nb_metropolis_wrap,
    }
else:
    _NUMBA_IMPL = {}


def get_impl(name: str, backend: str | None = None):
    """Fetch one kernel implementation, optionally pinning the backend."""
    back = backend or _ACTIVE
    table = _NUMBA_IMPL if back == "numba" else _NUMPY_IMPL
    if back == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend unavailable")
    return table[name]


def argmin_theta(xs, ys):
    return get_impl("argmin_theta")(xs, ys)


def bootstrap_thetas(x, y, idx):
    return get_impl("bootstrap_thetas")(x, y, idx)


def posterior_segments(xs, ys):
    return get_impl("posterior_segments")(xs, ys)


def segment_log_weights(edges, counts, omega, prior_code, pa, pb):
    return get_impl("segment_log_weights")(edges, counts, omega, prior_code, pa, pb)


def piecewise_sample(edges, cumw, prior_code, pa, pb, u_seg, u_pos):
    return get_impl("piecewise_sample")(edges, cumw, prior_code, pa, pb, u_seg, u_pos)


def coverage_count(x, y, omega, prior_code, pa, pb, idx, u_seg, u_pos, level, theta_ref):
    return get_impl("coverage_count")(
        x, y, omega, prior_code, pa, pb, idx, u_seg, u_pos, level, theta_ref
    )


def metropolis_chain(xs, M, omega, prior_code, pa, pb, theta0, step, z, u):
    return get_impl("metropolis_chain")(xs, M, omega, prior_code, pa, pb, theta0, step, z, u)


def misclass_counts(ys_sorted):
    """M(b), b = 0..n: misclassified count at each classification boundary."""
    return _np_misclass_counts(np.asarray(ys_sorted, dtype=np.int64))
