"""Monte Carlo and grid estimators for the kinematic measure identities.

With lines charted by (p, theta, t) and the invariant density
dG = dp dtheta dt, three identities tie line statistics of a convex body
D to its Lebesgue volume V and sub-Riemannian perimeter pA:

    integral of sigma(g) dG            = 2 pi V            (chord integral)
    measure of lines meeting D         = 2 pA              (Crofton)
    measure of segments meeting D      = 2 pi V + 2 l pA   (kinematic)

where sigma is the chord length and the segment measure uses
dK = dG dh over segments of length l >= 0.  The identities count
oriented lines: the canonical chart p >= 0 visits each unoriented line
once, so the window measure carries a factor 2 (equivalently, p ranges
over both signs).

Estimators draw lines uniformly from a window (a chart box guaranteed to
contain every line meeting the body), evaluate exact chords, and scale
by the window's oriented measure.  The h coordinate of segments is
integrated in closed form: a segment of length l placed on a line with
chord [a, b] meets the body for h in an interval of length sigma + l and
lies inside it for max(sigma - l, 0).

Randomness is counter-based (see :mod:`h1geom.rng`) and work is split
into fixed-size blocks, so results are bit-identical for a given
(seed, n) regardless of thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import TWO_PI, HorizontalLine, PshMotion
from .bodies import ConvexBody, transform_body
from .measures import p_area, volume
from .rng import uniforms

__all__ = [
    "DEFAULT_SEED",
    "BLOCK",
    "ContainmentError",
    "LineWindow",
    "Segment",
    "EstimateResult",
    "InvarianceRow",
    "InvarianceReport",
    "line_window",
    "estimate_line_measure",
    "estimate_chord_integral",
    "estimate_segment_hit_measure",
    "estimate_segment_containment_measure",
    "estimate_mean_chord",
    "containment_probability",
    "invariance_check",
]

DEFAULT_SEED = 1729
# fixed work-block size; sharding by blocks keeps sums independent of
# the thread count
BLOCK = 1 << 16
_STRATA = 64


class ContainmentError(Exception):
    """Raised when a body pair violates a required nesting."""


@dataclass(frozen=True)
class LineWindow:
    """A chart box {0 <= p <= p_max, 0 <= theta < 2 pi, t_lo <= t <= t_hi}
    of horizontal lines.

    ``chart_measure`` is its dp dtheta dt volume; ``measure`` doubles it
    to count oriented lines, which is the normalization the kinematic
    identities use.
    """

    p_max: float
    t_lo: float
    t_hi: float

    def __post_init__(self) -> None:
        if not (
            math.isfinite(self.p_max)
            and math.isfinite(self.t_lo)
            and math.isfinite(self.t_hi)
        ):
            raise ValueError("LineWindow needs finite extents")
        if self.p_max <= 0.0 or self.t_hi <= self.t_lo:
            raise ValueError(
                f"LineWindow needs p_max > 0 and t_hi > t_lo, got "
                f"p_max={self.p_max}, t=[{self.t_lo}, {self.t_hi}]"
            )

    @property
    def chart_measure(self) -> float:
        return TWO_PI * self.p_max * (self.t_hi - self.t_lo)

    @property
    def measure(self) -> float:
        """Oriented-line measure of the window (twice the chart volume)."""
        return 2.0 * self.chart_measure

    def contains_line(self, line: HorizontalLine) -> bool:
        return (
            0.0 <= line.p <= self.p_max and self.t_lo <= line.t <= self.t_hi
        )


def line_window(body: ConvexBody, margin: float = 1e-9) -> LineWindow:
    """A window guaranteed to contain every line meeting the body.

    If a line meets the body at a point with cylinder coordinates
    |xy| <= r and height z, then p <= r (p is the distance of the
    projected line from the origin) and, since p^2 + s^2 <= r^2 at the
    meeting parameter s, the base height t = z - s p lies within r^2 of
    z.  The box is inflated by a relative margin so boundary cases stay
    strictly inside.
    """
    b = body.bounds()
    r = b.r_xy
    scale = max(1.0, r, r * r, abs(b.z_min), abs(b.z_max))
    pad = margin * scale
    return LineWindow(
        p_max=r + pad, t_lo=b.z_min - r * r - pad, t_hi=b.z_max + r * r + pad
    )


@dataclass(frozen=True)
class Segment:
    """A horizontal segment: the piece of ``line`` with parameter in
    [h, h + ell]."""

    line: HorizontalLine
    h: float
    ell: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.h) and math.isfinite(self.ell)):
            raise ValueError("Segment needs finite h and ell")
        if self.ell < 0.0:
            raise ValueError(f"Segment needs ell >= 0, got {self.ell}")

    def hits(self, body: ConvexBody) -> bool:
        chord = body.chord(self.line)
        if chord.is_empty:
            return False
        return self.h <= chord.s_out and self.h + self.ell >= chord.s_in

    def contained_in(self, body: ConvexBody) -> bool:
        chord = body.chord(self.line)
        if chord.is_empty:
            return False
        return chord.s_in <= self.h and self.h + self.ell <= chord.s_out


@dataclass(frozen=True)
class EstimateResult:
    """A Monte Carlo (or grid) estimate with its uncertainty and, when a
    closed form or quadrature value exists, a reference to compare against.

    ``clamp_fraction`` is populated by the containment estimator: the
    fraction of hitting lines whose chord is shorter than the segment,
    where the integrand (sigma - ell) is clamped at zero and the linear
    formula 2 pi V - 2 ell pA stops being exact.
    """

    value: float
    std_error: float
    ci95: tuple[float, float]
    n_samples: int
    n_hits: int
    seed: int
    method: str
    reference: float | None = None
    reference_source: str | None = None
    clamp_fraction: float | None = None

    def z_score(self, reference: float | None = None) -> float:
        """Standardized deviation from a reference value."""
        ref = self.reference if reference is None else reference
        if ref is None:
            raise ValueError("no reference available for z_score")
        if self.std_error == 0.0:
            return 0.0 if self.value == ref else math.inf
        return (self.value - ref) / self.std_error


@dataclass(frozen=True)
class InvarianceRow:
    quantity: str
    value_original: float
    se_original: float
    value_transformed: float
    se_transformed: float
    z: float


@dataclass(frozen=True)
class InvarianceReport:
    """Estimates of invariant quantities before and after a rigid motion,
    with two-sample z statistics.  ``passed`` requires every |z| below
    ``threshold``."""

    motion: PshMotion
    n_samples: int
    seed: int
    threshold: float
    rows: list[InvarianceRow] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(abs(row.z) < self.threshold for row in self.rows)


def _check_common(n: int, seed: int, threads: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if not isinstance(seed, (int, np.integer)):
        raise ValueError(f"seed must be an integer, got {seed!r}")
    if not isinstance(threads, (int, np.integer)) or threads < 1:
        raise ValueError(f"threads must be a positive integer, got {threads!r}")


def _sample_block(
    window: LineWindow, seed: int, lo: int, hi: int, stratify: bool, streams: int = 3
):
    u = uniforms(seed, lo, hi - lo, streams)
    if stratify:
        # sample i draws theta from stratum i mod K, so every contiguous
        # index range covers the circle nearly uniformly
        strata = np.mod(np.arange(lo, hi, dtype=np.float64), float(_STRATA))
        theta = (strata + u[0]) * (TWO_PI / _STRATA)
    else:
        theta = u[0] * TWO_PI
    p = u[1] * window.p_max
    t = window.t_lo + u[2] * (window.t_hi - window.t_lo)
    return p, theta, t, u


def _run_blocks(n: int, threads: int, work) -> np.ndarray:
    blocks = [(lo, min(lo + BLOCK, n)) for lo in range(0, n, BLOCK)]
    if threads == 1:
        rows = [work(lo, hi) for lo, hi in blocks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda blk: work(*blk), blocks))
    return np.sum(np.asarray(rows, dtype=float), axis=0)


def _chord_stats(body, p, theta, t):
    s_lo, s_hi, hit = body.chord_batch(p, theta, t)
    sigma = np.where(hit, np.maximum(s_hi - s_lo, 0.0), 0.0)
    return sigma, hit


def _moment_estimate(body, window, n, seed, stratify, threads, f_of, track_clamp=False):
    def work(lo, hi):
        p, theta, t, _ = _sample_block(window, seed, lo, hi, stratify)
        sigma, hit = _chord_stats(body, p, theta, t)
        f = f_of(sigma, hit)
        clamped = np.count_nonzero(hit & (f == 0.0)) if track_clamp else 0
        return np.array(
            [f.sum(), np.sum(f * f), float(np.count_nonzero(hit)), float(clamped)]
        )

    s1, s2, hits, clamped = _run_blocks(n, threads, work)
    mean = s1 / n
    var = max(s2 - s1 * s1 / n, 0.0) / max(n - 1, 1)
    w = window.measure
    value = w * mean
    se = w * math.sqrt(var / n)
    if track_clamp:
        clamp_fraction = clamped / hits if hits > 0 else 0.0
    else:
        clamp_fraction = None
    return value, se, int(hits), clamp_fraction


def _grid_estimate(body, window, resolution, f_of):
    """Deterministic tensor-product midpoint rule over the chart box."""
    if resolution < 2:
        raise ValueError("grid resolution must be at least 2")
    p_vals = (np.arange(resolution) + 0.5) / resolution * window.p_max
    th_vals = (np.arange(resolution) + 0.5) / resolution * TWO_PI
    t_vals = window.t_lo + (np.arange(resolution) + 0.5) / resolution * (
        window.t_hi - window.t_lo
    )
    th_grid, t_grid = np.meshgrid(th_vals, t_vals, indexing="ij")
    th_flat, t_flat = th_grid.ravel(), t_grid.ravel()
    total = 0.0
    hits_total = 0
    for p in p_vals:
        sigma, hit = _chord_stats(
            body, np.full_like(th_flat, p), th_flat, t_flat
        )
        total += float(np.sum(f_of(sigma, hit)))
        hits_total += int(np.count_nonzero(hit))
    n_cells = resolution**3
    return window.measure * total / n_cells, n_cells, hits_total


def _make_result(
    body,
    n,
    seed,
    window,
    stratify,
    threads,
    method,
    grid_resolution,
    f_of,
    reference,
    ref_fn,
    track_clamp=False,
):
    _check_common(n, seed, threads)
    if method not in ("mc", "grid"):
        raise ValueError(f"unknown method {method!r}")
    if window is None:
        window = line_window(body)
    clamp_fraction = None
    if method == "grid":
        res = grid_resolution or max(8, int(round(n ** (1.0 / 3.0))))
        value, n_eff, hits = _grid_estimate(body, window, res, f_of)
        se = 0.0
    else:
        n_eff = n
        value, se, hits, clamp_fraction = _moment_estimate(
            body, window, n, seed, stratify, threads, f_of, track_clamp
        )
    ref_value, ref_source = (None, None)
    if reference == "auto":
        ref_value, ref_source = ref_fn()
    elif reference is not None:
        ref_value, ref_source = float(reference), "caller"
    return EstimateResult(
        value=value,
        std_error=se,
        ci95=(value - 1.96 * se, value + 1.96 * se),
        n_samples=n_eff,
        n_hits=hits,
        seed=seed,
        method=method,
        reference=ref_value,
        reference_source=ref_source,
        clamp_fraction=clamp_fraction,
    )


def estimate_line_measure(
    body: ConvexBody,
    n: int,
    seed: int = DEFAULT_SEED,
    *,
    window: LineWindow | None = None,
    stratify: bool = False,
    threads: int = 1,
    method: str = "mc",
    grid_resolution: int | None = None,
    reference="auto",
) -> EstimateResult:
    """Invariant measure of oriented lines meeting the body.

    Crofton-type reference: twice the p-Area.  ``reference='auto'``
    computes it by quadrature; pass a float to supply your own or None
    to skip.
    """

    def f_of(sigma, hit):
        return hit.astype(float)

    def ref_fn():
        return 2.0 * p_area(body).value, "2 * measures.p_area(body)"

    return _make_result(
        body,
        n,
        seed,
        window,
        stratify,
        threads,
        method,
        grid_resolution,
        f_of,
        reference,
        ref_fn,
    )


def estimate_chord_integral(
    body: ConvexBody,
    n: int,
    seed: int = DEFAULT_SEED,
    *,
    window: LineWindow | None = None,
    stratify: bool = False,
    threads: int = 1,
    method: str = "mc",
    grid_resolution: int | None = None,
    reference="auto",
) -> EstimateResult:
    """Integral of the chord length over oriented lines; equals
    2 pi V(body)."""

    def f_of(sigma, hit):
        return sigma

    def ref_fn():
        return TWO_PI * volume(body).value, "2*pi * measures.volume(body)"

    return _make_result(
        body,
        n,
        seed,
        window,
        stratify,
        threads,
        method,
        grid_resolution,
        f_of,
        reference,
        ref_fn,
    )


def estimate_segment_hit_measure(
    body: ConvexBody,
    ell: float,
    n: int,
    seed: int = DEFAULT_SEED,
    *,
    window: LineWindow | None = None,
    stratify: bool = False,
    threads: int = 1,
    method: str = "mc",
    grid_resolution: int | None = None,
    reference="auto",
    marginalize_h: bool = True,
) -> EstimateResult:
    """Kinematic measure of segments of length ell meeting the body;
    equals 2 pi V + 2 ell pA.

    With ``marginalize_h`` (default) the segment offset h is integrated
    exactly: a segment meets the body iff h lies in an interval of
    length sigma + ell.  Setting it False samples h uniformly as a
    fourth coordinate, a slower direct check of the dK = dG dh
    factorization.
    """
    ell = float(ell)
    if not math.isfinite(ell) or ell < 0.0:
        raise ValueError(f"ell must be finite and >= 0, got {ell}")

    def ref_fn():
        ref = TWO_PI * volume(body).value + 2.0 * ell * p_area(body).value
        return ref, "2*pi*measures.volume + 2*ell*measures.p_area"

    if marginalize_h:

        def f_of(sigma, hit):
            return (sigma + ell) * hit

        return _make_result(
            body,
            n,
            seed,
            window,
            stratify,
            threads,
            method,
            grid_resolution,
            f_of,
            reference,
            ref_fn,
        )

    # direct 4D sampling over (p, theta, t, h); any chord parameter
    # satisfies p^2 + s^2 <= r_xy^2, so h in [-(r + ell), r] covers every
    # hitting segment
    _check_common(n, seed, threads)
    if method != "mc":
        raise ValueError("direct h sampling is Monte Carlo only")
    win = window if window is not None else line_window(body)
    h_lo, h_hi = -(win.p_max + ell), win.p_max
    h_len = h_hi - h_lo

    def work(lo, hi):
        p, theta, t, u = _sample_block(win, seed, lo, hi, stratify, streams=4)
        s_lo, s_hi, hit = body.chord_batch(p, theta, t)
        h = h_lo + u[3] * h_len
        f = (hit & (h <= s_hi) & (h + ell >= s_lo)).astype(float)
        # f is an indicator, so its square sums to the same total
        sf = float(f.sum())
        return np.array([sf, sf, sf, 0.0])

    s1, s2, hits, _ = _run_blocks(n, threads, work)
    w = win.measure * h_len
    mean = s1 / n
    var = max(s2 - s1 * s1 / n, 0.0) / max(n - 1, 1)
    value = w * mean
    se = w * math.sqrt(var / n)
    ref_value, ref_source = (None, None)
    if reference == "auto":
        ref_value, ref_source = ref_fn()
    elif reference is not None:
        ref_value, ref_source = float(reference), "caller"
    return EstimateResult(
        value=value,
        std_error=se,
        ci95=(value - 1.96 * se, value + 1.96 * se),
        n_samples=n,
        n_hits=int(hits),
        seed=seed,
        method="mc-4d",
        reference=ref_value,
        reference_source=ref_source,
    )


def estimate_segment_containment_measure(
    body: ConvexBody,
    ell: float,
    n: int,
    seed: int = DEFAULT_SEED,
    *,
    window: LineWindow | None = None,
    stratify: bool = False,
    threads: int = 1,
    method: str = "mc",
    grid_resolution: int | None = None,
    reference="auto",
) -> EstimateResult:
    """Kinematic measure of segments of length ell contained in the body:
    the integral of max(sigma - ell, 0) over lines.

    Equals 2 pi V - 2 ell pA plus the clamp correction
    integral of max(ell - sigma, 0); the correction vanishes iff no
    hitting chord is shorter than ell (see ``clamp_fraction`` on the
    result).  A closed-form reference exists only at ell = 0, where the
    measure is the chord integral 2 pi V.
    """
    ell = float(ell)
    if not math.isfinite(ell) or ell < 0.0:
        raise ValueError(f"ell must be finite and >= 0, got {ell}")

    def f_of(sigma, hit):
        return np.maximum(sigma - ell, 0.0)

    def ref_fn():
        if ell == 0.0:
            return TWO_PI * volume(body).value, "2*pi * measures.volume(body)"
        return None, None

    return _make_result(
        body,
        n,
        seed,
        window,
        stratify,
        threads,
        method,
        grid_resolution,
        f_of,
        reference,
        ref_fn,
        track_clamp=True,
    )


def _ratio_from_sums(sums, n):
    sx, sy, sxx, syy, sxy = sums
    if sy <= 0.0:
        raise RuntimeError("no hits in the sample; enlarge n or check the window")
    mx, my = sx / n, sy / n
    r = mx / my
    denom = max(n - 1, 1)
    var_x = max(sxx - sx * sx / n, 0.0) / denom
    var_y = max(syy - sy * sy / n, 0.0) / denom
    cov = (sxy - sx * sy / n) / denom
    var_r = max(var_x - 2.0 * r * cov + r * r * var_y, 0.0) / (n * my * my)
    return r, math.sqrt(var_r)


def estimate_mean_chord(
    body: ConvexBody,
    n: int,
    seed: int = DEFAULT_SEED,
    *,
    window: LineWindow | None = None,
    stratify: bool = False,
    threads: int = 1,
    reference="auto",
) -> EstimateResult:
    """Mean chord length over lines meeting the body: the ratio of the
    chord integral to the line measure, estimated on common samples with
    a delta-method standard error.  Reference: pi V / pA."""
    _check_common(n, seed, threads)
    win = window if window is not None else line_window(body)

    def work(lo, hi):
        p, theta, t, _ = _sample_block(win, seed, lo, hi, stratify)
        sigma, hit = _chord_stats(body, p, theta, t)
        y = hit.astype(float)
        return np.array(
            [
                sigma.sum(),
                y.sum(),
                np.sum(sigma * sigma),
                y.sum(),
                np.sum(sigma * y),
            ]
        )

    sums = _run_blocks(n, threads, work)
    value, se = _ratio_from_sums(sums, n)
    hits = int(sums[1])
    ref_value, ref_source = (None, None)
    if reference == "auto":
        ref_value = math.pi * volume(body).value / p_area(body).value
        ref_source = "pi * measures.volume / measures.p_area"
    elif reference is not None:
        ref_value, ref_source = float(reference), "caller"
    return EstimateResult(
        value=value,
        std_error=se,
        ci95=(value - 1.96 * se, value + 1.96 * se),
        n_samples=n,
        n_hits=hits,
        seed=seed,
        method="mc",
        reference=ref_value,
        reference_source=ref_source,
    )


def _boundary_points(body: ConvexBody, count: int, seed: int) -> np.ndarray:
    """Deterministic pseudo-random points on the body boundary via its
    patches; coverage, not uniformity, is what nesting checks need."""
    patches = body.boundary_patches()
    rng = np.random.default_rng(seed)
    per_patch = max(1, -(-count // len(patches)))
    pts = []
    for patch in patches:
        u = rng.random(per_patch)
        v = rng.random(per_patch)
        p, _, _ = patch.evaluate(u, v)
        pts.append(p)
    return np.concatenate(pts, axis=0)


def containment_probability(
    inner: ConvexBody,
    outer: ConvexBody,
    ell: float,
    n: int,
    seed: int = DEFAULT_SEED,
    *,
    stratify: bool = False,
    threads: int = 1,
    reference="auto",
) -> EstimateResult:
    """Probability that a random segment of length ell meeting the outer
    body also meets the inner one: the ratio of kinematic hit measures,
    estimated on common samples drawn from the outer body's window.

    Requires inner to be contained in outer (checked by sampling the
    inner boundary); raises ContainmentError otherwise.
    """
    ell = float(ell)
    if not math.isfinite(ell) or ell < 0.0:
        raise ValueError(f"ell must be finite and >= 0, got {ell}")
    _check_common(n, seed, threads)
    ob = outer.bounds()
    scale = max(1.0, ob.r_xy, abs(ob.z_min), abs(ob.z_max))
    probe = _boundary_points(inner, 1024, seed)
    if not outer.contains_batch(probe, tol=1e-9 * scale).all():
        raise ContainmentError("inner body is not contained in the outer body")
    win = line_window(outer)

    def work(lo, hi):
        p, theta, t, _ = _sample_block(win, seed, lo, hi, stratify)
        sig_in, hit_in = _chord_stats(inner, p, theta, t)
        sig_out, hit_out = _chord_stats(outer, p, theta, t)
        x = (sig_in + ell) * hit_in
        y = (sig_out + ell) * hit_out
        return np.array(
            [
                x.sum(),
                y.sum(),
                np.sum(x * x),
                np.sum(y * y),
                np.sum(x * y),
                float(np.count_nonzero(hit_out)),
            ]
        )

    sums = _run_blocks(n, threads, work)
    value, se = _ratio_from_sums(sums[:5], n)
    hits = int(sums[5])
    ref_value, ref_source = (None, None)
    if reference == "auto":
        num = TWO_PI * volume(inner).value + 2.0 * ell * p_area(inner).value
        den = TWO_PI * volume(outer).value + 2.0 * ell * p_area(outer).value
        ref_value = num / den
        ref_source = "(2*pi*V + 2*ell*pA) inner over outer [measures]"
    elif reference is not None:
        ref_value, ref_source = float(reference), "caller"
    return EstimateResult(
        value=value,
        std_error=se,
        ci95=(value - 1.96 * se, value + 1.96 * se),
        n_samples=n,
        n_hits=hits,
        seed=seed,
        method="mc",
        reference=ref_value,
        reference_source=ref_source,
    )


def invariance_check(
    body: ConvexBody,
    motion: PshMotion,
    n: int,
    seed: int = DEFAULT_SEED,
    *,
    stratify: bool = False,
    threads: int = 1,
    threshold: float = 4.0,
    quantities: tuple[str, ...] = (
        "line_measure",
        "chord_integral",
        "segment_hit_measure_ell1",
    ),
) -> InvarianceReport:
    """Estimate invariant quantities for the body and its image under a
    rigid motion, each in its own window, and compare with two-sample
    z statistics.  The quantities (line measure, chord integral, segment
    hit measure at ell = 1) are exactly invariant, so |z| beyond the
    threshold signals an implementation defect rather than noise."""
    _check_common(n, seed, threads)
    image = transform_body(motion, body)
    runners = {
        "line_measure": lambda b, s: estimate_line_measure(
            b, n, s, stratify=stratify, threads=threads, reference=None
        ),
        "chord_integral": lambda b, s: estimate_chord_integral(
            b, n, s, stratify=stratify, threads=threads, reference=None
        ),
        "segment_hit_measure_ell1": lambda b, s: estimate_segment_hit_measure(
            b, 1.0, n, s, stratify=stratify, threads=threads, reference=None
        ),
    }
    unknown = [q for q in quantities if q not in runners]
    if unknown:
        raise ValueError(f"unknown invariance quantities {unknown}")
    rows = []
    for name in quantities:
        runner = runners[name]
        est_a = runner(body, seed)
        est_b = runner(image, seed + 1)
        pooled = math.hypot(est_a.std_error, est_b.std_error)
        if pooled == 0.0:
            z = 0.0 if est_a.value == est_b.value else math.inf
        else:
            z = (est_a.value - est_b.value) / pooled
        rows.append(
            InvarianceRow(
                quantity=name,
                value_original=est_a.value,
                se_original=est_a.std_error,
                value_transformed=est_b.value,
                se_transformed=est_b.std_error,
                z=z,
            )
        )
    return InvarianceReport(
        motion=motion, n_samples=n, seed=seed, threshold=threshold, rows=rows
    )
