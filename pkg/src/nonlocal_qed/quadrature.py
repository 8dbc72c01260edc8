"""One-dimensional integration engines.

Everything here is built on a globally adaptive Gauss-Kronrod (10/21 point)
bisection scheme.  Integrands are called with a 1-D array of abscissae and
must return an array whose first axis matches it; trailing axes are allowed,
so vector and tensor valued integrands are integrated in a single pass.

Three entry points cover what the rest of the package needs:

* :func:`integrate_semi_infinite` for radial ``k`` integrals with an
  algebraic tail,
* :func:`integrate_principal_value` for ``f(x) / (x**2 - pole**2)`` type
  integrands (Kramers-Kronig and reservoir integrals),
* :func:`integrate_omega_thermal` for frequency integrals weighted by the
  Planck factor.

Divergent integrals are never reported as numbers: :func:`diagnose_growth`
measures how partial integrals grow with the cutoff and classifies the
growth as logarithmic or power law.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "QuadratureConfig",
    "IntegralResult",
    "DivergenceDiagnosis",
    "integrate_interval",
    "integrate_semi_infinite",
    "integrate_principal_value",
    "integrate_omega_thermal",
    "algebraic_tail",
    "diagnose_growth",
    "classify_growth",
    "planck_weight",
]

Integrand = Callable[[np.ndarray], np.ndarray]

# Kronrod 21-point abscissae on [0, 1] (descending) and weights.  The Gauss
# 10-point nodes are the odd entries xgk[1], xgk[3], ...
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525478520,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

# Full symmetric node set on [-1, 1] and matching weight vectors.
NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_wg_half = np.zeros(11)
_wg_half[1:10:2] = _WG
GAUSS_WEIGHTS = np.concatenate([_wg_half[:-1], _wg_half[::-1]])

_EPS = np.finfo(float).eps
TAIL_STRATEGIES = ("mapped", "analytic")
THERMAL_MODES = ("full", "thermal_only", "zero_point")


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and tail handling shared by all engines.

    ``tail_start_factor`` multiplies the characteristic scale the caller
    passes in; the engine never guesses that scale itself.
    ``tail_strategy`` is ``"mapped"`` (integrate ``[X, inf)`` after the
    substitution ``x = X / t``) or ``"analytic"`` (extrapolate the
    ``x**-tail_order`` law beyond ``X``).
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000
    tail_start_factor: float = 10.0
    tail_order: int = 2
    tail_strategy: str = "mapped"

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be > 0, got {self.rel_tol!r}")
        if not self.abs_tol >= 0:
            raise ValueError(f"abs_tol must be >= 0, got {self.abs_tol!r}")
        if self.max_subdivisions < 10:
            raise ValueError(f"max_subdivisions must be >= 10, got {self.max_subdivisions!r}")
        if not self.tail_start_factor > 0:
            raise ValueError("tail_start_factor must be > 0")
        if self.tail_strategy not in TAIL_STRATEGIES:
            raise ValueError(f"unknown tail_strategy {self.tail_strategy!r}")
        if self.tail_strategy == "analytic" and self.tail_order < 2:
            raise ValueError("analytic tail needs tail_order >= 2")

    def tightened(self, factor: float = 0.5) -> "QuadratureConfig":
        return replace(self, rel_tol=self.rel_tol * factor, abs_tol=self.abs_tol * factor)


@dataclass(frozen=True)
class DivergenceDiagnosis:
    """Growth of partial integrals with the cutoff.

    ``kind`` is ``"convergent"``, ``"logarithmic"`` or ``"power"``;
    ``exponent`` is the fitted power (0 for logarithmic growth).  ``end``
    says which limit was pushed: ``"infinity"`` (cutoffs grow) or
    ``"origin"`` (cutoffs shrink towards the lower limit).
    """

    kind: str
    exponent: float
    end: str
    cutoffs: tuple = ()
    partials: tuple = ()

    @property
    def divergent(self) -> bool:
        return self.kind != "convergent"

    def describe(self) -> str:
        if self.kind == "power":
            return f"power-law divergence at {self.end}, exponent {self.exponent:.3g}"
        if self.kind == "logarithmic":
            return f"logarithmic divergence at {self.end}"
        return "convergent"

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "exponent": self.exponent,
            "end": self.end,
            "cutoffs": list(self.cutoffs),
            "partials": list(self.partials),
        }


@dataclass(frozen=True)
class IntegralResult:
    """Value of an integral with an honest error estimate.

    When ``converged`` is true, ``error_estimate <= max(rel_tol*|value|,
    abs_tol)``.  A diagnosed divergence carries ``value = nan`` and a
    :class:`DivergenceDiagnosis`.
    """

    value: float | complex | np.ndarray
    error_estimate: float
    subdivisions_used: int
    converged: bool
    tail_value: float | complex | np.ndarray = 0.0
    diagnosis: DivergenceDiagnosis | None = field(default=None, compare=False)

    @property
    def divergent(self) -> bool:
        return self.diagnosis is not None and self.diagnosis.divergent

    @property
    def tail_fraction(self) -> float:
        scale = _norm(self.value)
        if not scale or not np.isfinite(scale):
            return 0.0
        return _norm(self.tail_value) / scale


def _norm(v) -> float:
    return float(np.max(np.abs(v)))


def _rows(weights: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Multiply each row of ``values`` by the matching entry of ``weights``."""
    return values * weights.reshape(weights.shape + (1,) * (values.ndim - 1))


def _gk21(g: Integrand, a: float, b: float):
    centre = 0.5 * (a + b)
    half = 0.5 * (b - a)
    fx = np.asarray(g(centre + half * NODES))
    kron = half * np.tensordot(KRONROD_WEIGHTS, fx, axes=1)
    gauss = half * np.tensordot(GAUSS_WEIGHTS, fx, axes=1)
    resabs = abs(half) * float(np.max(np.tensordot(KRONROD_WEIGHTS, np.abs(fx), axes=1)))
    err = _norm(kron - gauss)
    if not np.isfinite(err):
        err = math.inf
    err = max(err, 50.0 * _EPS * resabs)
    return kron, err


def _adaptive(pieces: Sequence[tuple[Integrand, float, float]], config: QuadratureConfig):
    """Globally adaptive bisection over several (integrand, a, b) pieces.

    Returns (value, error, intervals_used, converged, per_piece_values).
    """
    heap = []
    settled = []  # intervals too narrow to split further
    counter = 0
    for idx, (g, a, b) in enumerate(pieces):
        if b <= a:
            continue
        val, err = _gk21(g, a, b)
        heap.append((-err, counter, idx, a, b, val))
        counter += 1
    if not heap:
        return 0.0, 0.0, 0, True, [0.0] * len(pieces)
    heapq.heapify(heap)
    span = max(b - a for _, a, b in pieces if b > a)

    total = sum(item[5] for item in heap)
    total_err = sum(-item[0] for item in heap)
    n_intervals = len(heap)
    converged = False
    while True:
        target = max(config.rel_tol * _norm(total), config.abs_tol)
        if total_err <= target:
            converged = True
            break
        if not heap or n_intervals >= config.max_subdivisions:
            break
        neg_err, _, idx, a, b, val = heapq.heappop(heap)
        mid = 0.5 * (a + b)
        if not (a < mid < b) or (b - a) <= 64 * _EPS * max(abs(a), abs(b), 1e-3 * span):
            settled.append((neg_err, counter, idx, a, b, val))
            continue
        g = pieces[idx][0]
        v1, e1 = _gk21(g, a, mid)
        v2, e2 = _gk21(g, mid, b)
        total = total - val + v1 + v2
        total_err = total_err + neg_err + e1 + e2
        if not np.isfinite(total_err):
            total_err = math.inf
        heapq.heappush(heap, (-e1, counter, idx, a, mid, v1))
        heapq.heappush(heap, (-e2, counter + 1, idx, mid, b, v2))
        counter += 2
        n_intervals += 1

    # Deterministic final summation, ordered by position.
    items = sorted(heap + settled, key=lambda it: (it[2], it[3]))
    value = np.sum(np.stack([np.asarray(it[5]) for it in items]), axis=0)
    err = math.fsum(-it[0] for it in items)
    if np.ndim(value) == 0:
        value = value.item()
    per_piece = []
    for idx in range(len(pieces)):
        mine = [np.asarray(it[5]) for it in items if it[2] == idx]
        per_piece.append(np.sum(np.stack(mine), axis=0) if mine else 0.0)
    target = max(config.rel_tol * _norm(value), config.abs_tol)
    converged = converged and err <= target and bool(np.all(np.isfinite(value)))
    return value, err, n_intervals, converged, per_piece


def _breakpoints(lower: float, upper: float, points: Sequence[float]) -> list[float]:
    inner = sorted({float(p) for p in points if lower < p < upper})
    return [lower, *inner, upper]


def integrate_interval(f: Integrand, a: float, b: float, config: QuadratureConfig | None = None,
                       *, points: Sequence[float] = ()) -> IntegralResult:
    """Adaptive integral of ``f`` over the finite interval ``[a, b]``."""
    config = config or QuadratureConfig()
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("integrate_interval needs finite limits")
    if b < a:
        res = integrate_interval(f, b, a, config, points=points)
        return replace(res, value=-res.value)
    edges = _breakpoints(a, b, points)
    pieces = [(f, lo, hi) for lo, hi in zip(edges[:-1], edges[1:])]
    value, err, n, ok, _ = _adaptive(pieces, config)
    return IntegralResult(value, err, n, ok)


_MAX_TAIL_DOUBLINGS = 60


def algebraic_tail(f_at_start, start: float, order: float):
    """Integral of ``f_at_start * (start / x)**order`` over ``[start, inf)``.

    For ``f(x) = x**-n`` this is ``start**(1 - n) / (n - 1)``.
    """
    if order <= 1:
        raise ValueError("tail order must exceed 1 for a convergent tail")
    return f_at_start * start / (order - 1)


def _mapped_tail(f: Integrand, start: float) -> Integrand:
    def g(t):
        x = start / t
        return _rows(start / (t * t), np.asarray(f(x)))
    return g


def integrate_semi_infinite(f: Integrand, config: QuadratureConfig | None = None, *,
                            scale: float = 1.0, points: Sequence[float] = (),
                            lower: float = 0.0, tail_start: float | None = None) -> IntegralResult:
    """Integrate ``f`` over ``[lower, inf)``.

    ``[lower, X]`` is integrated adaptively with the caller's breakpoints;
    ``X = tail_start_factor * scale`` unless ``tail_start`` is given, and is
    pushed beyond the largest breakpoint.  The remainder is handled by the
    configured tail strategy.
    """
    config = config or QuadratureConfig()
    if scale <= 0:
        raise ValueError("scale must be positive")
    X = tail_start if tail_start is not None else config.tail_start_factor * scale
    finite_points = [p for p in points if np.isfinite(p)]
    if finite_points:
        X = max(X, 2.0 * max(finite_points))
    X = max(X, lower + scale)
    edges = _breakpoints(lower, X, finite_points)
    pieces = [(f, lo, hi) for lo, hi in zip(edges[:-1], edges[1:])]

    if config.tail_strategy == "mapped":
        value, err, n, ok, parts = _adaptive(pieces + [(_mapped_tail(f, X), 0.0, 1.0)], config)
        return IntegralResult(value, err, n, ok, tail_value=parts[-1])

    body_value, body_err, n, ok, _ = _adaptive(pieces, config)
    # Push X outward until the algebraic extrapolations from X and 2X agree.
    for _ in range(_MAX_TAIL_DOUBLINGS):
        fX = np.asarray(f(np.array([X])))[0]
        f2X = np.asarray(f(np.array([2.0 * X])))[0]
        bridge = _adaptive([(f, X, 2.0 * X)], config)
        # The 2X extrapolation is the more accurate one; its error is bounded
        # by the disagreement with the X extrapolation.
        tail = bridge[0] + algebraic_tail(f2X, 2.0 * X, config.tail_order)
        tail_err = _norm(tail - algebraic_tail(fX, X, config.tail_order)) + bridge[1]
        n += bridge[2]
        target = max(config.rel_tol * _norm(body_value + tail), config.abs_tol)
        if tail_err <= 0.5 * target or not np.isfinite(tail_err):
            break
        body_value, body_err, ok = body_value + bridge[0], body_err + bridge[1], ok and bridge[3]
        X *= 2.0
    value = body_value + tail
    err = body_err + tail_err
    if np.ndim(value) == 0:
        value = complex(value) if np.iscomplexobj(value) else float(value)
    target = max(config.rel_tol * _norm(value), config.abs_tol)
    return IntegralResult(value, err, n, ok and err <= target, tail_value=tail)


def integrate_principal_value(f: Integrand, pole: float, config: QuadratureConfig | None = None, *,
                              domain: tuple[float, float] = (0.0, math.inf), scale: float | None = None,
                              points: Sequence[float] = ()) -> IntegralResult:
    """Principal value of the integral of ``f(x) / (x**2 - pole**2)`` over ``domain``.

    ``f`` must be smooth at the pole.  The pole value is subtracted, leaving
    a regular integrand, and ``f(pole) * PV int dx / (x**2 - pole**2)`` is
    added back in closed form.
    """
    config = config or QuadratureConfig()
    if not pole > 0:
        raise ValueError(f"pole must be positive, got {pole!r}")
    a, b = domain
    if not b > a:
        raise ValueError("empty integration domain")
    if a == pole or b == pole:
        raise ValueError("pole on an endpoint of the domain")
    f_pole = np.asarray(f(np.array([pole])))[0]

    def regular(x):
        x = np.asarray(x, dtype=float)
        return _rows(1.0 / (x * x - pole * pole), np.asarray(f(x)) - f_pole)

    def log_term(x):
        if math.isinf(x):
            return 0.0
        return math.log(abs(x - pole) / (x + pole))

    analytic = (log_term(b) - log_term(a)) / (2.0 * pole)
    pts = (pole, *points)
    if math.isinf(b):
        res = integrate_semi_infinite(regular, config, scale=scale or pole, points=pts, lower=a)
    else:
        res = integrate_interval(regular, a, b, config, points=pts)
    value = res.value + f_pole * analytic
    if np.ndim(value) == 0:
        value = value.item() if isinstance(value, np.ndarray) else value
    return replace(res, value=value)


def planck_weight(omega, T: float, mode: str):
    """Frequency weight of the chosen thermal mode.

    ``full`` is ``coth(omega / 2T)``, ``thermal_only`` is ``coth - 1 = 2N``
    and ``zero_point`` is 1.  At ``T = 0`` full reduces to zero_point.
    """
    if mode not in THERMAL_MODES:
        raise ValueError(f"unknown thermal mode {mode!r}")
    omega = np.asarray(omega, dtype=float)
    if mode == "zero_point" or (mode == "full" and T == 0):
        return np.ones_like(omega)
    if T == 0:
        return np.zeros_like(omega)
    with np.errstate(over="ignore"):
        two_n = 2.0 / np.expm1(omega / T)
    return two_n if mode == "thermal_only" else 1.0 + two_n


def classify_growth(cutoffs: Sequence[float], partials: Sequence[float], *, end: str = "infinity",
                    flat_tol: float = 0.15) -> DivergenceDiagnosis:
    """Classify partial integrals taken at geometric cutoffs.

    With ``P(L) ~ C * L**p`` the increments between successive cutoffs grow
    like ``L**p``; a log-log fit of the increments therefore gives ``p``
    directly.  Zero slope with same-signed increments is logarithmic growth,
    a clearly negative slope means the partials settle.  For ``end="origin"``
    the growth variable is ``1 / cutoff``.
    """
    cutoffs = np.asarray(cutoffs, dtype=float)
    partials = np.asarray(partials, dtype=float)
    record = (tuple(float(c) for c in cutoffs), tuple(float(p) for p in partials))
    if len(cutoffs) < 3:
        raise ValueError("need at least three cutoffs to classify growth")
    u = cutoffs if end == "infinity" else 1.0 / cutoffs
    inc = np.diff(partials)
    scale = max(float(np.max(np.abs(partials))), 1e-300)
    if np.all(np.abs(inc) <= 1e-12 * scale):
        return DivergenceDiagnosis("convergent", 0.0, end, *record)
    if np.any(inc == 0):
        return DivergenceDiagnosis("convergent", 0.0, end, *record)
    slope = float(np.polyfit(np.log(u[1:]), np.log(np.abs(inc)), 1)[0])
    same_sign = bool(np.all(np.sign(inc) == np.sign(inc[0])))
    if slope > flat_tol and same_sign:
        kind, exponent = "power", slope
    elif abs(slope) <= flat_tol and same_sign:
        kind, exponent = "logarithmic", 0.0
    else:
        kind, exponent = "convergent", slope
    return DivergenceDiagnosis(kind, exponent, end, *record)


def diagnose_growth(f: Integrand, anchor: float, cutoffs: Sequence[float],
                    config: QuadratureConfig | None = None, *, end: str = "infinity",
                    points: Sequence[float] = ()) -> DivergenceDiagnosis:
    """Integrate ``f`` up to (or down to) each cutoff and classify the growth.

    For ``end="infinity"`` partials are ``int_anchor^L f``; for
    ``end="origin"`` they are ``int_eps^anchor f``.  Breakpoints are placed
    geometrically so each partial resolves its own end region.
    """
    config = config or QuadratureConfig()
    partials = []
    for c in cutoffs:
        lo, hi = (anchor, c) if end == "infinity" else (c, anchor)
        ratio = hi / lo if lo > 0 else 0.0
        geo = list(np.geomspace(lo, hi, int(min(60, max(2, math.log2(ratio) + 1)))) if ratio > 1 else [])
        res = integrate_interval(f, lo, hi, config, points=[*points, *geo])
        partials.append(float(np.real(res.value)))
    return classify_growth(cutoffs, partials, end=end)


def integrate_omega_thermal(f: Integrand, T: float, mode: str = "thermal_only",
                            config: QuadratureConfig | None = None, *,
                            points: Sequence[float] = (), scale: float | None = None) -> IntegralResult:
    """Integrate ``f(omega) * weight(omega)`` over ``omega`` in ``(0, inf)``.

    The weight is :func:`planck_weight`.  Breakpoints are geometric from
    ``1e-3 T`` to ``40 T`` so the ``2T/omega`` behaviour of the weight is
    resolved; thermal_only integrals switch to the tail treatment at
    ``40 T``.  Non-convergence triggers a growth diagnosis at both ends; a
    divergence is returned as ``value = nan`` with the diagnosis attached.
    """
    config = config or QuadratureConfig()
    if T < 0:
        raise ValueError("temperature must be >= 0")
    if mode not in THERMAL_MODES:
        raise ValueError(f"unknown thermal mode {mode!r}")
    if mode == "thermal_only" and T == 0:
        return IntegralResult(0.0, 0.0, 0, True)

    def g(w):
        w = np.asarray(w, dtype=float)
        return _rows(planck_weight(w, T, mode), np.asarray(f(w)))

    if T > 0:
        geo = list(T * np.geomspace(1e-3, 40.0, 24))
        tail_start = 40.0 * T
    else:
        geo = []
        tail_start = None
    if scale is not None:
        tail_start = max(tail_start or 0.0, config.tail_start_factor * scale)
    with np.errstate(over="ignore", invalid="ignore"):
        res = integrate_semi_infinite(g, config, scale=scale or max(T, 1.0), points=[*geo, *points],
                                      tail_start=tail_start)
    if res.converged:
        return res

    anchor = tail_start or config.tail_start_factor * (scale or 1.0)
    probe = replace(config, rel_tol=max(config.rel_tol, 1e-6), max_subdivisions=max(config.max_subdivisions, 400))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        at_origin = diagnose_growth(g, anchor, anchor * np.geomspace(1e-3, 1e-7, 5), probe, end="origin",
                                    points=points)
        at_infinity = diagnose_growth(g, anchor, anchor * np.geomspace(10.0, 1e4, 4), probe, end="infinity",
                                      points=points)
    for diag in (at_infinity, at_origin):
        if diag.divergent:
            return replace(res, value=math.nan, diagnosis=diag)
    return res
