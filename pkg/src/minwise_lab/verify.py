"""Ground-truth oracles for (k-)min-wise error and the supporting lemmas.

Everything here is measured, not assumed: exhaustive mode enumerates
the full seed space and reports exact fractions; Monte-Carlo mode is an
explicit opt-in with a counter-based RNG so every report is exactly
reproducible.  Inequalities asserted by these oracles are instantiated
proof-chain bounds (valid at any scale); the asymptotic closed forms
they descend from are reported alongside with a holds/fails/vacuous
tag, since desk-scale constants rarely satisfy their hypotheses.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    EmptyQuery,
    RegimeMismatch,
    SeedSpaceTooLarge,
)
from .kwise import SeededFamily, TWiseFamily
from .rectprg import PRGHashFamily, Rectangle, RectanglePRG, rectangle_hits_exact

EXHAUSTIVE_SEED_BITS = 24
CSV_SCHEMA = "# minwise-lab schema v1"
CSV_COLUMNS = [
    "family_id", "N", "M", "k", "|X|", "mode", "samples",
    "measured_p", "uniform_ref", "fair_p",
    "mult_err_uniform", "mult_err_fair", "tie_mass", "ci_halfwidth",
]


def uniform_minwise_probability(sizeX: int, M: int, k: int = 1) -> Fraction:
    """Exact Pr[max h(Y) < min h(X\\Y)] under uniformly random h, |Y| = k.

    Closed form by enumerating the maximum theta of the bottom-k values:
    sum_theta [(theta/M)^k - ((theta-1)/M)^k] * ((M-theta)/M)^(|X|-k).
    """
    if M < 2:
        raise ValueError("alphabet M must be >= 2")
    if not 1 <= k <= sizeX:
        raise ValueError(f"need 1 <= k <= |X|, got k={k}, |X|={sizeX}")
    total = Fraction(0)
    rest = sizeX - k
    for theta in range(1, M + 1):
        top = Fraction(theta, M) ** k - Fraction(theta - 1, M) ** k
        total += top * Fraction(M - theta, M) ** rest
    return total


@dataclass
class ErrorReport:
    """One measured (family, X, Y) query with both reference comparisons."""

    family_id: str
    N: int
    M: int
    k: int
    sizeX: int
    mode: str
    samples: int
    measured_p: float
    uniform_ref: float
    fair_p: float
    mult_err_uniform: float
    mult_err_fair: float
    tie_mass: float
    ci_halfwidth: float
    exact_measured: Fraction | None = field(default=None, repr=False)
    exact_uniform: Fraction | None = field(default=None, repr=False)
    exact_tie: Fraction | None = field(default=None, repr=False)

    def csv_row(self) -> list[str]:
        return [
            self.family_id, str(self.N), str(self.M), str(self.k),
            str(self.sizeX), self.mode, str(self.samples),
            repr(self.measured_p), repr(self.uniform_ref), repr(self.fair_p),
            repr(self.mult_err_uniform), repr(self.mult_err_fair),
            repr(self.tie_mass), repr(self.ci_halfwidth),
        ]

    def to_json(self) -> dict:
        return {col: val for col, val in zip(
            CSV_COLUMNS,
            [self.family_id, self.N, self.M, self.k, self.sizeX, self.mode,
             self.samples, self.measured_p, self.uniform_ref, self.fair_p,
             self.mult_err_uniform, self.mult_err_fair, self.tie_mass,
             self.ci_halfwidth],
        )}


def _query_sets(family: SeededFamily, X, Y) -> tuple[list[int], list[int]]:
    x_raw = [int(v) for v in X]
    y_raw = [int(v) for v in Y]
    xs = list(dict.fromkeys(x_raw))
    ys = list(dict.fromkeys(y_raw))
    if len(xs) != len(x_raw) or len(ys) != len(y_raw):
        raise ValueError("X and Y must not contain duplicates")
    if not set(ys) <= set(xs):
        raise ValueError("Y must be a subset of X")
    if not ys or set(ys) == set(xs):
        raise EmptyQuery("need a nonempty Y strictly inside X")
    for v in xs:
        family._check_x(v)
    return xs, ys


def _count_hits(family: SeededFamily, seeds: np.ndarray,
                xs: list[int], ys: list[int]) -> tuple[int, int]:
    """(#seeds with max h(Y) < min h(X\\Y), #seeds with equality)."""
    rest = [x for x in xs if x not in ys]
    max_y = None
    for y in ys:
        vals = family.eval_block(seeds, y)
        max_y = vals if max_y is None else np.maximum(max_y, vals)
    min_rest = None
    for x in rest:
        vals = family.eval_block(seeds, x)
        min_rest = vals if min_rest is None else np.minimum(min_rest, vals)
    return int((max_y < min_rest).sum()), int((max_y == min_rest).sum())


def measure_minwise(
    family: SeededFamily,
    X,
    Y,
    mode: str = "exhaustive",
    samples: int | None = None,
    run_seed: int = 0,
    chunk_bits: int = 20,
) -> ErrorReport:
    """Measure Pr[max h(Y) < min h(X\\Y)] with strict inequalities.

    Exhaustive mode (seed_bits <= 24) counts the whole seed space and is
    exact; Monte-Carlo mode samples with Philox keyed by run_seed and
    attaches a 99% normal-approximation confidence half-width.  Ties
    (max h(Y) == min h(X\\Y)) are reported separately: they are exactly
    the mass the strict convention loses at finite M.
    """
    xs, ys = _query_sets(family, X, Y)
    k = len(ys)
    uniform = uniform_minwise_probability(len(xs), family.range_size, k)
    fair = Fraction(1, math.comb(len(xs), k))

    if mode == "exhaustive":
        if family.seed_bits > EXHAUSTIVE_SEED_BITS:
            raise SeedSpaceTooLarge(
                f"{family.seed_bits} seed bits exceed the exhaustive budget "
                f"({EXHAUSTIVE_SEED_BITS})"
            )
        total = family.seed_space
        hits = ties = 0
        step = 1 << chunk_bits
        for lo in range(0, total, step):
            seeds = np.arange(lo, min(lo + step, total), dtype=np.uint64)
            h, t = _count_hits(family, seeds, xs, ys)
            hits += h
            ties += t
        measured = Fraction(hits, total)
        tie_mass = Fraction(ties, total)
        ci = 0.0
        n_reported = total
    elif mode == "mc":
        if not samples or samples < 1:
            raise ValueError("monte-carlo mode needs a positive sample count")
        rng = np.random.Generator(np.random.Philox(key=run_seed))
        seeds = family.draw_seed_block(rng, samples)
        h, t = _count_hits(family, seeds, xs, ys)
        measured = Fraction(h, samples)
        tie_mass = Fraction(t, samples)
        p = float(measured)
        ci = 2.576 * math.sqrt(max(p * (1.0 - p), 0.0) / samples)
        n_reported = samples
    else:
        raise ValueError(f"unknown mode {mode!r}")

    return ErrorReport(
        family_id=family.family_id,
        N=family.domain_size,
        M=family.range_size,
        k=k,
        sizeX=len(xs),
        mode=mode,
        samples=n_reported,
        measured_p=float(measured),
        uniform_ref=float(uniform),
        fair_p=float(fair),
        mult_err_uniform=float(abs(measured - uniform) / uniform),
        mult_err_fair=float(abs(measured - fair) / fair),
        tie_mass=float(tie_mass),
        ci_halfwidth=ci,
        exact_measured=measured if mode == "exhaustive" else None,
        exact_uniform=uniform,
        exact_tie=tie_mass if mode == "exhaustive" else None,
    )


# ---------------------------------------------------------------------------
# allocation load checks
# ---------------------------------------------------------------------------


@dataclass
class BoundCheck:
    """One inequality: measured frequency vs a numeric bound."""

    description: str
    frequency: float
    bound: float
    vacuous: bool
    ok: bool

    @classmethod
    def make(cls, description: str, frequency, bound) -> "BoundCheck":
        vac = bound > 1
        ok = vac or float(frequency) <= float(bound) + 1e-12
        return cls(description, float(frequency), float(bound), vac, ok)

    @property
    def tag(self) -> str:
        if self.vacuous:
            return "vacuous"
        return "holds" if self.ok else "fails"


@dataclass
class LoadReport:
    regime: str
    ell: int
    sizeX: int
    k: int
    r: int
    threshold: float
    bad_frequency: float
    max_load_seen: int
    chain: BoundCheck
    closed_form: BoundCheck
    bj_threshold: int | None = None
    bj_frequency: float | None = None
    bj_chain: BoundCheck | None = None

    def asserted_ok(self) -> bool:
        ok = self.chain.ok
        if self.bj_chain is not None:
            ok = ok and self.bj_chain.ok
        return ok

    def to_json(self) -> dict:
        out = {
            "regime": self.regime, "ell": self.ell, "sizeX": self.sizeX,
            "k": self.k, "r": self.r, "threshold": self.threshold,
            "bad_frequency": self.bad_frequency,
            "max_load_seen": self.max_load_seen,
            "chain_bound": self.chain.bound, "chain_tag": self.chain.tag,
            "closed_form_bound": self.closed_form.bound,
            "closed_form_tag": self.closed_form.tag,
        }
        if self.bj_chain is not None:
            out.update({
                "bj_threshold": self.bj_threshold,
                "bj_frequency": self.bj_frequency,
                "bj_chain_bound": self.bj_chain.bound,
                "bj_chain_tag": self.bj_chain.tag,
            })
        return out


def binomial_central_moment(r: int, p: Fraction, e: int) -> Fraction:
    """Exact e-th central moment of Binomial(r, p)."""
    mean = r * p
    total = Fraction(0)
    for j in range(r + 1):
        w = math.comb(r, j) * p ** j * (1 - p) ** (r - j)
        total += w * (Fraction(j) - mean) ** e
    return total


def binomial_tail_at_least(r: int, p: Fraction, u: int) -> Fraction:
    """Exact Pr[Binomial(r, p) >= u]."""
    if u <= 0:
        return Fraction(1)
    total = Fraction(0)
    for j in range(u, r + 1):
        total += math.comb(r, j) * p ** j * (1 - p) ** (r - j)
    return total


def _bounded_count_poly(r: int, lo: int, hi: int, ell: int) -> Fraction:
    """Exact Pr[every bucket load in [lo, hi]] for r uniform balls, ell buckets.

    Exponential-generating-function count: r! * [x^r] (sum_{c=lo}^{hi}
    x^c / c!)^ell / ell^r.
    """
    base = [Fraction(0)] * (r + 1)
    for c in range(lo, min(hi, r) + 1):
        base[c] = Fraction(1, math.factorial(c))
    poly = [Fraction(1)] + [Fraction(0)] * r
    for _ in range(ell):
        nxt = [Fraction(0)] * (r + 1)
        for i, a in enumerate(poly):
            if a == 0:
                continue
            for j, b in enumerate(base):
                if i + j > r:
                    break
                if b != 0:
                    nxt[i + j] += a * b
        poly = nxt
    return poly[r] * math.factorial(r) / Fraction(ell) ** r


def _scan_loads(g_family: SeededFamily, xs, ys, ell: int, bad_of_counts,
                bj_threshold: int | None, chunk_bits: int = 18):
    """Exhaustive chunked scan of g-seeds: bad-event count, max load, B_J tail.

    ``bad_of_counts`` maps a (chunk, ell) load matrix to a boolean
    per-seed bad indicator.  Returns (bad, max_load, bj_bad, total).
    """
    if g_family.seed_bits > EXHAUSTIVE_SEED_BITS:
        raise SeedSpaceTooLarge(
            f"{g_family.seed_bits}-bit g-seed space too large to enumerate"
        )
    rest = [x for x in xs if x not in ys]
    total = g_family.seed_space
    step = 1 << chunk_bits
    bad = bj_bad = max_seen = 0
    for lo in range(0, total, step):
        seeds = np.arange(lo, min(lo + step, total), dtype=np.uint64)
        counts = np.zeros((len(seeds), ell), dtype=np.int32)
        for x in rest:
            vals = g_family.eval_block(seeds, x)
            for i in range(1, ell + 1):
                counts[:, i - 1] += vals == i
        bad += int(bad_of_counts(counts).sum())
        max_seen = max(max_seen, int(counts.max()) if counts.size else 0)
        if bj_threshold is not None:
            in_j = np.zeros((len(seeds), ell), dtype=bool)
            for y in ys:
                vals = g_family.eval_block(seeds, y)
                for i in range(1, ell + 1):
                    in_j[:, i - 1] |= vals == i
            bj = (counts * in_j).sum(axis=1)
            bj_bad += int((bj >= bj_threshold).sum())
    return bad, max_seen, bj_bad, total


def check_load_lemma(
    g_family,
    X,
    Y,
    ell: int,
    regime: str,
    C: int = 1,
    C_g: int = 2,
    t: int | None = None,
    independence: int | None = None,
) -> LoadReport:
    """Audit the allocation-load claims for one (X, Y) at bucket count ell.

    ``g_family`` is a SeededFamily onto [ell] (exhaustively enumerated)
    or the string "uniform" for the exact multinomial computation — the
    two coincide whenever the family's independence covers |X|.

    The asserted inequality per regime is the instantiated proof-chain
    bound (a finite-scale theorem): the union-over-subsets bound in the
    small regime and the even-central-moment Markov bound in the mid
    and large regimes.  The asymptotic closed form (1/ell^(3C) and
    friends) is reported with a holds/fails/vacuous tag but never
    asserted, since its hidden constants have no desk-scale value.
    """
    xs = list(dict.fromkeys(int(v) for v in X))
    ys = list(dict.fromkeys(int(v) for v in Y))
    if not set(ys) <= set(xs) or not ys:
        raise ValueError("need nonempty Y, a subset of X")
    k = len(ys)
    r = len(xs) - k
    if t is None:
        t = max(1, int(round(math.log2(ell))))

    lo09, hi11 = ell ** 0.9, ell ** 1.1
    actual = "small" if len(xs) <= lo09 else ("large" if len(xs) >= hi11 else "mid")
    if regime != actual:
        raise RegimeMismatch(
            f"|X|={len(xs)} is in the {actual!r} regime at ell={ell}, "
            f"not {regime!r}"
        )

    uniform_g = isinstance(g_family, str)
    if uniform_g:
        if g_family != "uniform":
            raise ValueError(f"unknown allocation sentinel {g_family!r}")
        indep = r + k
    else:
        if g_family.range_size != ell:
            raise ValueError(
                f"allocation family range {g_family.range_size} != ell {ell}"
            )
        indep = independence if independence is not None else getattr(g_family, "t", None)
        if indep is None:
            raise ValueError(
                "pass independence= for allocation families without a "
                "declared degree"
            )

    p1 = Fraction(1, ell)
    mean = r * p1

    if regime == "small":
        if k == 1:
            threshold = float(C_g)
        else:
            threshold = C_g + 10 * k * math.log2(max(2, len(xs))) / t
        u_eff = min(max(1, math.ceil(threshold)), indep)
        bj_thr = None
        if k > 1:
            bj_thr = min(max(1, (C_g - 1) * k), max(1, indep - k))
        if uniform_g:
            freq = 1 - _bounded_count_poly(r, 0, u_eff - 1, ell)
            max_seen = r
            if bj_thr is not None:
                bj_freq = Fraction(0)
                for alloc in _y_allocations(ell, k):
                    kp = len(set(alloc))
                    bj_freq += binomial_tail_at_least(r, Fraction(kp, ell), bj_thr)
                bj_freq /= ell ** k
        else:
            bad, max_seen, bj_bad, total = _scan_loads(
                g_family, xs, ys, ell,
                lambda c: (c >= u_eff).any(axis=1), bj_thr)
            freq = Fraction(bad, total)
            if bj_thr is not None:
                bj_freq = Fraction(bj_bad, total)
        chain_val = min(Fraction(1), ell * math.comb(r, u_eff) * p1 ** u_eff)
        chain = BoundCheck.make(
            f"Pr[any load >= {u_eff}] <= ell*C(r,{u_eff})/ell^{u_eff}",
            freq, chain_val,
        )
        if k == 1:
            closed = BoundCheck.make(
                "1/ell^(3C)", freq, Fraction(1, ell ** (3 * C)))
        else:
            closed = BoundCheck.make(
                "1/(ell^(3C)*|X|^k)", freq,
                Fraction(1, ell ** (3 * C) * len(xs) ** k))
        report = LoadReport(
            regime, ell, len(xs), k, r, float(u_eff), float(freq),
            max_seen, chain, closed,
        )
        if bj_thr is not None:
            bj_chain_val = min(
                Fraction(1), math.comb(r, bj_thr) * Fraction(k, ell) ** bj_thr)
            report.bj_threshold = bj_thr
            report.bj_frequency = float(bj_freq)
            report.bj_chain = BoundCheck.make(
                f"Pr[|B_J| >= {bj_thr}] <= C(r,{bj_thr})*(k/ell)^{bj_thr}",
                bj_freq, bj_chain_val,
            )
        return report

    # mid and large regimes share the even-moment machinery, which needs
    # at least pairwise independence to be a theorem
    if indep < 2:
        raise ValueError("mid/large regime chains need >= pairwise independence")
    e = indep if indep % 2 == 0 else indep - 1
    e = min(e, 12)
    mu = binomial_central_moment(r, p1, e)
    if regime == "mid":
        a = ell ** 0.1
        threshold = float(mean) + a
        if uniform_g:
            cap = math.ceil(threshold - 1e-12) - 1
            freq = 1 - _bounded_count_poly(r, 0, max(0, cap), ell)
            max_seen = r
        else:
            bad, max_seen, _, total = _scan_loads(
                g_family, xs, ys, ell,
                lambda c: (c - float(mean) >= a - 1e-12).any(axis=1), None)
            freq = Fraction(bad, total)
        chain = BoundCheck.make(
            f"Pr[any load - mean >= ell^0.1] <= ell*mu_{e}/ell^(0.1*{e})",
            freq, ell * float(mu) / a ** e,
        )
        closed = BoundCheck.make(
            "1/ell^(3C*k)" if k > 1 else "1/ell^(3C)",
            freq, Fraction(1, ell ** (3 * C * k)))
        return LoadReport(
            regime, ell, len(xs), k, r, threshold, float(freq),
            max_seen, chain, closed,
        )

    a = 0.1 * float(mean)
    if uniform_g:
        lo = math.floor(float(mean) - a + 1e-12) + 1
        hi = math.ceil(float(mean) + a - 1e-12) - 1
        freq = 1 - _bounded_count_poly(r, max(0, lo), max(0, hi), ell)
        max_seen = r
    else:
        bad, max_seen, _, total = _scan_loads(
            g_family, xs, ys, ell,
            lambda c: (np.abs(c - float(mean)) >= a - 1e-12).any(axis=1), None)
        freq = Fraction(bad, total)
    chain = BoundCheck.make(
        f"Pr[any |load - mean| >= 0.1*mean] <= ell*mu_{e}/(0.1*mean)^{e}",
        freq, ell * float(mu) / a ** e,
    )
    closed = BoundCheck.make(
        "1/|X|^(3C*k)" if k > 1 else "1/|X|^(3C)",
        freq, Fraction(1, len(xs) ** (3 * C * k)))
    return LoadReport(
        regime, ell, len(xs), k, r, a, float(freq), max_seen, chain, closed,
    )


def _y_allocations(ell: int, k: int):
    """All ell^k ways to place the k query points into buckets."""
    if k == 0:
        yield ()
        return
    for rest in _y_allocations(ell, k - 1):
        for b in range(1, ell + 1):
            yield rest + (b,)


# ---------------------------------------------------------------------------
# t-wise minimum tail
# ---------------------------------------------------------------------------


@dataclass
class TailReport:
    t: int
    b: int
    theta: int
    M: int
    exact_p: float
    reference: float
    tolerance: float
    within: bool
    implied_constant: float | None

    def to_json(self) -> dict:
        return {
            "t": self.t, "b": self.b, "theta": self.theta, "M": self.M,
            "exact_p": self.exact_p, "reference": self.reference,
            "tolerance": self.tolerance, "within": self.within,
            "implied_constant": self.implied_constant,
        }


def check_twise_tail(t: int, b: int, theta: int, M: int) -> TailReport:
    """Exact Pr[min of b t-wise values > theta] vs the truncation bound.

    Asserts the two-sided inclusion-exclusion estimate
    |Pr - (1 - theta/M)^b| <= (b*theta/M)^t / t!, a theorem for any
    t-wise family.  The sub-gaussian-style second estimate involves an
    unspecified universal constant, so the implied constant is reported
    instead of asserted.
    """
    if not 0 <= theta <= M:
        raise ValueError(f"theta {theta} outside [0, {M}]")
    family = TWiseFamily(t, b, M)
    if family.seed_bits > EXHAUSTIVE_SEED_BITS:
        raise SeedSpaceTooLarge(f"{family.seed_bits}-bit family seed space")
    seeds = np.arange(family.seed_space, dtype=np.uint64)
    above = np.ones(len(seeds), dtype=bool)
    for x in range(1, b + 1):
        above &= family.eval_block(seeds, x) > theta
    exact = Fraction(int(above.sum()), family.seed_space)
    reference = (1 - Fraction(theta, M)) ** b
    tolerance = Fraction(b * theta, M) ** t / math.factorial(t)
    within = abs(exact - reference) <= tolerance
    implied = None
    if theta > 0 and exact > 0:
        implied = float(exact) ** (2.0 / t) * (b * theta / M) / t
    return TailReport(
        t, b, theta, M, float(exact), float(reference), float(tolerance),
        within, implied,
    )


# ---------------------------------------------------------------------------
# reduction audit: rectangle error bounds min-wise error
# ---------------------------------------------------------------------------


@dataclass
class ReductionReport:
    N: int
    M: int
    k: int
    sizeX: int
    delta: float
    rectangles_checked: int
    measured_p: float
    uniform_p: float
    additive_error: float
    additive_bound: float
    mult_error: float
    mult_bound: float
    precondition_ok: bool
    additive_ok: bool
    mult_ok: bool

    def asserted_ok(self) -> bool:
        return self.additive_ok and (not self.precondition_ok or self.mult_ok)

    def to_json(self) -> dict:
        return {
            "N": self.N, "M": self.M, "k": self.k, "sizeX": self.sizeX,
            "delta": self.delta,
            "rectangles_checked": self.rectangles_checked,
            "measured_p": self.measured_p, "uniform_p": self.uniform_p,
            "additive_error": self.additive_error,
            "additive_bound": self.additive_bound,
            "mult_error": self.mult_error, "mult_bound": self.mult_bound,
            "precondition_ok": self.precondition_ok,
            "additive_ok": self.additive_ok, "mult_ok": self.mult_ok,
        }


def _reduction_rectangles(N: int, M: int, xs: list[int], ys: list[int]):
    """The rectangle predicates whose errors drive the reduction bound."""
    rest = [x for x in xs if x not in ys]
    above = lambda theta: frozenset(range(theta + 1, M + 1))
    if len(ys) == 1:
        y = ys[0]
        for theta in range(1, M + 1):
            sets = {x: above(theta) for x in rest}
            sets[y] = {theta}
            yield Rectangle.build(N, M, sets)
        return
    for theta in range(1, M + 1):
        for top in (theta, theta - 1):
            sets = {x: above(theta) for x in rest}
            at_most = frozenset(range(1, top + 1))
            for y in ys:
                sets[y] = at_most
            yield Rectangle.build(N, M, sets)


def check_reduction(prg: RectanglePRG, X, Y) -> ReductionReport:
    """Exact audit: min-wise error of the PRG-as-family vs its rectangle error.

    delta is the maximum additive rectangle error over the reduction's
    own rectangles; the asserted inequalities are
    |measured - uniform| <= M*delta (2M*delta for k >= 2) and, when the
    uniform probability clears the reduction's floor 0.5*k!/N^k, the
    multiplicative form with bound 2NM*delta (k = 1) or
    (N^k/k!)*4M*delta.  Both sides are exact rationals.
    """
    family = PRGHashFamily(prg)
    xs, ys = _query_sets(family, X, Y)
    k = len(ys)
    N, M = prg.dimension, prg.alphabet
    report = measure_minwise(family, xs, ys, mode="exhaustive")
    measured, uniform = report.exact_measured, report.exact_uniform

    delta = Fraction(0)
    n_rects = 0
    for rect in _reduction_rectangles(N, M, xs, ys):
        hits, total = rectangle_hits_exact(prg, rect)
        err = abs(Fraction(hits, total) - rect.uniform_expectation())
        delta = max(delta, err)
        n_rects += 1

    additive = abs(measured - uniform)
    additive_bound = (M if k == 1 else 2 * M) * delta
    mult = additive / uniform
    if k == 1:
        mult_bound = 2 * N * M * delta
    else:
        mult_bound = Fraction(N ** k * 4 * M, math.factorial(k)) * delta
    precondition = uniform >= Fraction(math.factorial(k), 2 * N ** k)

    return ReductionReport(
        N=N, M=M, k=k, sizeX=len(xs),
        delta=float(delta),
        rectangles_checked=n_rects,
        measured_p=float(measured),
        uniform_p=float(uniform),
        additive_error=float(additive),
        additive_bound=float(additive_bound),
        mult_error=float(mult),
        mult_bound=float(mult_bound),
        precondition_ok=bool(precondition),
        additive_ok=additive <= additive_bound,
        mult_ok=mult <= mult_bound,
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def write_reports_csv(path, reports) -> None:
    """One row per query under the versioned schema header."""
    with open(path, "w", newline="") as fh:
        fh.write(CSV_SCHEMA + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rep in reports:
            writer.writerow(rep.csv_row())


def write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def summarize_reports(reports) -> dict:
    """Max/median multiplicative errors over a corpus of ErrorReports."""
    if not reports:
        return {"queries": 0, "max_mult_err_uniform": None,
                "median_mult_err_uniform": None,
                "max_mult_err_fair": None, "max_tie_mass": None}
    uni = sorted(r.mult_err_uniform for r in reports)
    mid = len(uni) // 2
    median = uni[mid] if len(uni) % 2 else (uni[mid - 1] + uni[mid]) / 2
    return {
        "queries": len(reports),
        "max_mult_err_uniform": max(uni),
        "median_mult_err_uniform": median,
        "max_mult_err_fair": max(r.mult_err_fair for r in reports),
        "max_tie_mass": max(r.tie_mass for r in reports),
    }
