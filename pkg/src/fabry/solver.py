"""Resonances near ``k0``: asymptotic seeds, Newton refinement, contour counts."""

from __future__ import annotations

import cmath
import logging
import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from fabry.asymptotics import (
    ExpansionCoefficients,
    delta_type_shift,
    expansion_coefficients,
    leading_constants,
)
from fabry.capacitance import BlockSpectrum, block_spectrum, build_capacitance
from fabry.chain import (
    BlockPartition,
    MaterialParams,
    StructuralVector,
    Wavenumber,
    enumerate_E,
    resonant_index_set,
)
from fabry.transfer import g_function, g_value

log = logging.getLogger(__name__)

NEWTON_MAXIT = 60
STEP_TOL = 1e-13
MAX_STEP = 0.5  # resonances of interest sit well within this of their seeds
MAX_CONTOUR_NODES = 2**16


def branch_label(i: int) -> str:
    """a, b, ..., z, aa, ab, ..."""
    s = ""
    i += 1
    while i:
        i, rem = divmod(i - 1, 26)
        s = chr(ord("a") + rem) + s
    return s


@dataclass(frozen=True)
class Seed:
    kind: str  # "sqrt" or "delta"
    sign: int  # +1 / -1 for sqrt-type, 0 for delta-type
    coeffs: ExpansionCoefficients | None
    k_seed: complex
    k_asym: complex


def _nu(delta: complex, r: float) -> complex:
    return 2 * delta / (delta + r)


@dataclass(frozen=True)
class Problem:
    """Everything about ``(t, k0)`` that does not depend on delta."""

    t: StructuralVector
    k0: Wavenumber
    params: MaterialParams
    partition: BlockPartition
    spectrum: BlockSpectrum
    expansions: tuple[ExpansionCoefficients, ...]
    delta_shift_nu: complex | None

    @property
    def n(self) -> int:
        return self.partition.n

    @property
    def m(self) -> int:
        return self.partition.m

    @property
    def r(self) -> float:
        return float(self.params.r)

    @property
    def v(self) -> float:
        return float(self.params.v)


def prepare(t: StructuralVector, k0: Wavenumber, params: MaterialParams | None = None) -> Problem:
    if params is None:
        params = MaterialParams(delta=0j)
    partition = resonant_index_set(t, k0)
    sys = build_capacitance(t, k0, partition)
    spec = block_spectrum(sys)
    exps = tuple(expansion_coefficients(sys, spec, params))
    shift = None
    if partition.n - 2 * partition.m == 1:
        shift = delta_type_shift(leading_constants(t, k0, partition))
    return Problem(t, k0, params, partition, spec, exps, shift)


def seed_branches(problem: Problem, delta: complex) -> list[Seed]:
    """``2m`` square-root seeds and ``n - 2m`` delta-type seeds, in branch order."""
    k0 = problem.k0.value
    r = problem.r
    seeds: list[Seed] = []
    for ec in problem.expansions:
        for sign in (1, -1):
            k = ec.k_of_delta(delta, sign)
            seeds.append(Seed("sqrt", sign, ec, k, k))
    n_delta = problem.n - 2 * problem.m
    shift = 0j
    if problem.delta_shift_nu is not None:
        shift = problem.delta_shift_nu * _nu(delta, r)
    for _ in range(n_delta):
        seeds.append(Seed("delta", 0, None, k0 + shift, complex(k0)))
    return seeds


@dataclass(frozen=True)
class NewtonResult:
    root: complex
    residual: float
    iterations: int
    converged: bool


def newton_refine(
    t,
    nu: complex,
    seed: complex,
    tol: float = STEP_TOL,
    maxit: int = NEWTON_MAXIT,
    *,
    deflate: Sequence[complex] = (),
    precision: str | None = None,
) -> NewtonResult:
    """Damped complex Newton on ``g(k; nu) / prod(k - r_i)``.

    Deflating against already-found roots keeps clustered seeds from
    collapsing onto one root.  Stops once a step is below ``tol`` relative to
    ``1 + |k|``; ``residual`` is ``|g|`` at the returned point.
    """
    k = complex(seed)
    g, dg = g_function(t, k, nu, precision=precision)
    if g == 0:
        return NewtonResult(k, 0.0, 0, True)

    def deflated_abs(kk: complex, gg: complex) -> float:
        val = abs(gg)
        for rt in deflate:
            val /= abs(kk - rt) or 1e-300
        return val

    for it in range(1, maxit + 1):
        logd = dg / g - sum(1.0 / (k - rt) for rt in deflate)
        if logd == 0:
            return NewtonResult(k, abs(g), it, False)
        step = -1.0 / logd
        if abs(step) > MAX_STEP:
            step *= MAX_STEP / abs(step)
        cur = deflated_abs(k, g)
        lam = 1.0
        for _ in range(30):
            k_new = k + lam * step
            try:
                g_new, dg_new = g_function(t, k_new, nu, precision=precision)
            except OverflowError:
                lam *= 0.5
                continue
            if deflated_abs(k_new, g_new) <= cur or lam < 1e-6:
                break
            lam *= 0.5
        k, g, dg = k_new, g_new, dg_new
        if g == 0 or abs(lam * step) < tol * (1 + abs(k)):
            return NewtonResult(k, abs(g), it, True)
    return NewtonResult(k, abs(g), maxit, False)


@dataclass(frozen=True)
class ContourCount:
    center: complex
    radius: float
    winding: int
    raw: complex
    nodes: int


def _winding_sum(t, nu, center, radius, nodes, precision):
    theta = 2 * np.pi * np.arange(nodes) / nodes
    pts = center + radius * np.exp(1j * theta)
    acc = 0j
    worst = 0.0
    for k in pts:
        g, dg = g_function(t, complex(k), nu, precision=precision)
        term = dg / g * (k - center)
        worst = max(worst, abs(term))
        acc += term
    return acc / nodes, worst


def contour_count(
    t,
    nu: complex,
    center: complex,
    radius: float,
    *,
    start_nodes: int = 64,
    precision: str | None = None,
) -> ContourCount:
    """Number of zeros of ``g(.; nu)`` inside the circle, by the argument principle.

    Trapezoid rule on the circle, doubling nodes until the rounded value is
    stable and within 1e-3 of an integer.  If a zero sits close to the
    contour (huge ``g'/g``) the radius is nudged outward.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    for _ in range(6):
        nodes = start_nodes
        prev = None
        near_root = False
        while nodes <= MAX_CONTOUR_NODES:
            val, worst = _winding_sum(t, nu, center, radius, nodes, precision)
            if worst > 1e3 * max(1.0, abs(val)) * nodes:
                near_root = True
                break
            rounded = int(round(val.real))
            if prev is not None and rounded == prev and abs(val - rounded) < 1e-3:
                return ContourCount(complex(center), radius, rounded, complex(val), nodes)
            prev = rounded
            nodes *= 2
        if not near_root:
            break
        radius *= 1.07
    raise RuntimeError(
        f"contour integral around {center} (radius {radius:.3g}) did not stabilise"
    )


def default_radius(problem: Problem, delta: complex) -> float:
    lam_max = float(problem.spectrum.nonzero_eigenvalues.max()) if problem.m else 0.0
    rad = max(3 * math.sqrt(lam_max * abs(delta) / problem.r), 10 * abs(delta))
    k0 = problem.k0.value
    kmax = 2 * k0 + 1
    others = [w.value for w in enumerate_E(problem.t, _kmax_q(problem.k0, kmax))]
    others = [x for x in others if abs(x - k0) > 1e-12] + [0.0]
    gap = min(abs(x - k0) for x in others)
    return min(rad, gap / 2)


def _kmax_q(k0: Wavenumber, kmax: float):
    if k0.exact:
        return Fraction(2) * k0.q + 1
    return kmax / math.pi


@dataclass
class ResonanceBranch:
    branch_id: int
    label: str
    kind: str
    sign: int
    lam: float | None
    c1: float | None
    c2: complex | None
    block: tuple[int, int] | None
    k_asym: complex
    k_num: complex
    residual: float
    converged: bool

    def as_dict(self) -> dict:
        return {
            "branch_id": self.branch_id,
            "label": self.label,
            "kind": self.kind,
            "sign": self.sign,
            "block": list(self.block) if self.block else None,
            "lambda": self.lam,
            "c1": self.c1,
            "c2": [self.c2.real, self.c2.imag] if self.c2 is not None else None,
            "k_asym": [self.k_asym.real, self.k_asym.imag],
            "k_num": [self.k_num.real, self.k_num.imag],
            "residual": self.residual,
            "converged": self.converged,
        }


@dataclass
class ResonanceSet:
    k0: Wavenumber
    delta: complex
    branches: list[ResonanceBranch]
    warnings: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def roots(self) -> list[complex]:
        return [b.k_num for b in self.branches]

    def distinct_roots(self, tol: float) -> list[complex]:
        out: list[complex] = []
        for k in self.roots:
            if cmath.isfinite(k) and all(abs(k - r0) >= tol for r0 in out):
                out.append(k)
        return out


def residual_scale(t, k0: float, nu: complex) -> float:
    return max(1.0, abs(g_value(t, k0 + 0.1, nu)))


def _retry_offsets(
    t, nu: complex, seed: complex, roots: Sequence[complex], dedup: float
) -> NewtonResult | None:
    """Restart a collapsed seed from small offsets around it.

    Roots of clustered delta-type branches can sit ``O(nu^2)`` apart, closer
    than deflation reliably separates from a shared seed.
    """
    a = abs(nu)
    for scale in (a, a**2, math.sqrt(a)):
        for u in (1, -1, 1j, -1j):
            res = newton_refine(t, nu, seed + u * scale, deflate=roots)
            if res.converged and not any(abs(res.root - r0) < dedup for r0 in roots):
                return res
    return None


def _shared_prediction(preds: Sequence[complex], i: int, tol: float) -> bool:
    return any(j != i and abs(preds[j] - preds[i]) < tol for j in range(len(preds)))


def _refine_all(
    t,
    nu: complex,
    preds: Sequence[complex],
    seeds: Sequence[complex],
    dedup: float,
    warnings: list[str],
    notes: list[str],
) -> tuple[list[complex], list[NewtonResult]]:
    """Refine seeds with deflation, then match roots to predictions."""
    roots: list[complex] = []
    results: list[NewtonResult] = []
    for i, s in enumerate(seeds):
        res = newton_refine(t, nu, s, deflate=roots)
        if any(abs(res.root - r0) < dedup for r0 in roots):
            res = _retry_offsets(t, nu, s, roots, dedup) or res
        # Polish without deflation so the root is not biased by its neighbours.
        polished = newton_refine(t, nu, res.root, maxit=8)
        # A polish that lands on a known root means the two are closer than the
        # polish radius; the deflated result is then the better estimate.
        moved_ok = abs(polished.root - res.root) < 1e-6 * (1 + abs(res.root))
        if moved_ok and not any(abs(polished.root - r0) < dedup for r0 in roots):
            res = NewtonResult(polished.root, polished.residual, res.iterations + polished.iterations, res.converged or polished.converged)
        if any(abs(res.root - r0) < dedup for r0 in roots):
            if _shared_prediction(preds, i, dedup):
                # Branches with the same prediction that stay together at the
                # solver tolerance are reported as one root of multiplicity > 1.
                notes.append(f"seed {s:.12g}: branch indistinguishable from another at solver tolerance")
                roots.append(res.root)
                results.append(res)
            else:
                warnings.append(f"seed {s:.12g} converged onto an existing root; kept once")
            continue
        if not res.converged:
            warnings.append(f"Newton did not converge from seed {s:.12g}")
        roots.append(res.root)
        results.append(res)
    if not roots:
        return [], []
    cost = np.abs(np.subtract.outer(np.asarray(preds), np.asarray(roots)))
    rows, cols = linear_sum_assignment(cost)
    ordered: list[complex] = [complex("nan")] * len(preds)
    ordered_res: list[NewtonResult] = [NewtonResult(complex("nan"), math.inf, 0, False)] * len(preds)
    for i, j in zip(rows, cols):
        ordered[i] = roots[j]
        ordered_res[i] = results[j]
    return ordered, ordered_res


def find_resonances(
    t: StructuralVector,
    k0: Wavenumber,
    delta: complex,
    params: MaterialParams | None = None,
    *,
    problem: Problem | None = None,
    seeds_override: Sequence[complex] | None = None,
) -> ResonanceSet:
    if problem is None:
        problem = prepare(t, k0, params)
    delta = complex(delta)
    nu = _nu(delta, problem.r)
    seeds = seed_branches(problem, delta)
    preds = [s.k_seed for s in seeds]
    starts = list(seeds_override) if seeds_override is not None else preds
    warnings: list[str] = []
    notes: list[str] = []
    dedup = 1e-10 * (1 + problem.k0.value)
    roots, results = _refine_all(problem.t, nu, preds, starts, dedup, warnings, notes)
    if len(roots) < len(seeds):
        roots += [complex("nan")] * (len(seeds) - len(roots))
    scale = residual_scale(problem.t, problem.k0.value, nu)
    branches = []
    for i, (s, root) in enumerate(zip(seeds, roots)):
        res = results[i] if i < len(results) else NewtonResult(root, math.inf, 0, False)
        ec = s.coeffs
        branches.append(
            ResonanceBranch(
                branch_id=i,
                label=branch_label(i),
                kind=s.kind,
                sign=s.sign,
                lam=ec.lam if ec else None,
                c1=ec.c1 if ec else None,
                c2=ec.c2 if ec else None,
                block=(ec.a, ec.b) if ec else None,
                k_asym=s.k_asym,
                k_num=root,
                residual=res.residual / scale,
                converged=res.converged and math.isfinite(root.real),
            )
        )
    for w in warnings:
        log.warning(w)
    return ResonanceSet(problem.k0, delta, branches, warnings, notes)


# --- delta sweeps -------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    branch_id: int
    label: str
    kind: str
    lam: complex
    delta: float
    k_num: complex
    k_asym: complex
    abs_err: float
    residual: float


@dataclass
class SweepTable:
    rows: list[SweepRow]
    slopes: dict[int, float]
    labels: dict[int, str]
    kinds: dict[int, str]
    warnings: list[str] = field(default_factory=list)

    def branch_rows(self, branch_id: int) -> list[SweepRow]:
        return [r for r in self.rows if r.branch_id == branch_id]


def fit_loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return math.nan
    slope, _ = np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)
    return float(slope)


def default_deltas(dmin: float = 1e-5, dmax: float = 1e-2, points: int = 16) -> list[float]:
    return [float(d) for d in np.geomspace(dmax, dmin, points)]


def delta_sweep(
    t: StructuralVector,
    k0: Wavenumber,
    deltas: Sequence[float],
    params: MaterialParams | None = None,
    *,
    problem: Problem | None = None,
) -> SweepTable:
    """Track every branch from the largest delta downward by continuation.

    The next seed is the asymptotic prediction at the new delta corrected by
    the previous remainder scaled as ``delta^{3/2}`` (sqrt-type) or ``delta``
    (delta-type).  If two branches land on the same root the step is redone
    from plain asymptotic seeds.
    """
    if problem is None:
        problem = prepare(t, k0, params)
    deltas = sorted((float(d) for d in deltas), reverse=True)
    if any(d <= 0 for d in deltas):
        raise ValueError("deltas must be positive")
    rows: list[SweepRow] = []
    warnings: list[str] = []
    prev: ResonanceSet | None = None
    prev_delta = None
    for d in deltas:
        if prev is None:
            cur = find_resonances(problem.t, problem.k0, d, problem=problem)
        else:
            seeds = seed_branches(problem, d)
            starts = []
            for s, b in zip(seeds, prev.branches):
                prev_pred = seed_branches(problem, prev_delta)[b.branch_id].k_seed
                power = 1.5 if s.kind == "sqrt" else 1.0
                remainder = b.k_num - prev_pred
                if not cmath.isfinite(remainder):
                    remainder = 0
                starts.append(s.k_seed + remainder * (d / prev_delta) ** power)
            cur = find_resonances(problem.t, problem.k0, d, problem=problem, seeds_override=starts)
            if cur.warnings:
                warnings.append(f"delta={d:.6g}: continuation collision, re-seeded from asymptotics")
                cur = find_resonances(problem.t, problem.k0, d, problem=problem)
        warnings.extend(f"delta={d:.6g}: {w}" for w in cur.warnings)
        for b in cur.branches:
            lam = complex(b.lam) if b.lam is not None else complex(0)
            rows.append(
                SweepRow(
                    branch_id=b.branch_id,
                    label=b.label,
                    kind=b.kind,
                    lam=lam,
                    delta=d,
                    k_num=b.k_num,
                    k_asym=b.k_asym,
                    abs_err=abs(b.k_num - b.k_asym) * problem.v,
                    residual=b.residual,
                )
            )
        prev, prev_delta = cur, d
    rows.sort(key=lambda r: (r.branch_id, -r.delta))
    slopes: dict[int, float] = {}
    labels: dict[int, str] = {}
    kinds: dict[int, str] = {}
    for r in rows:
        labels[r.branch_id] = r.label
        kinds[r.branch_id] = r.kind
    if len(deltas) >= 4:
        for bid in labels:
            br = [r for r in rows if r.branch_id == bid]
            slopes[bid] = fit_loglog_slope([r.delta for r in br], [r.abs_err for r in br])
    return SweepTable(rows, slopes, labels, kinds, warnings)
