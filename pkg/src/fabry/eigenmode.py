"""Eigenmodes by exact piecewise propagation of ``(u, u')``.

Left of the chain the mode is the outgoing wave ``exp(-i k x)``.  Each
segment is crossed with the propagation matrix at the local wavenumber and
the derivative jumps by the contrast at every resonator boundary.  Nothing
here uses the asymptotic expansions; they are only compared against.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from fabry.capacitance import BlockSpectrum
from fabry.chain import BlockPartition, ResonatorChain, Wavenumber, build_structural_vector
from fabry.solver import newton_refine

log = logging.getLogger(__name__)

POINTS_PER_SEGMENT = 40
RESIDUAL_TOL = 1e-6


class DegenerateEigenvalueError(ValueError):
    """The eigenvalue is shared by several blocks; only numeric modes apply."""


def propagation_matrix(k: complex, a: float) -> np.ndarray:
    """``P(k, a)`` mapping ``(u, u')`` at ``x`` to ``x + a`` for ``u'' + k^2 u = 0``."""
    ka = k * a
    c = cmath.cos(ka)
    if k == 0:
        s_over_k = a
    else:
        s_over_k = cmath.sin(ka) / k
    return np.array([[c, s_over_k], [-k * cmath.sin(ka), c]], dtype=complex)


@dataclass(frozen=True)
class BoundaryState:
    """Values just left and right of a boundary point ``x_j`` (1-based ``j``)."""

    j: int
    x: float
    u_left: complex
    du_left: complex
    u_right: complex
    du_right: complex


@dataclass
class EigenmodeProfile:
    k: complex
    delta: complex
    x: np.ndarray
    u: np.ndarray
    interval: np.ndarray  # 0 left exterior, 1..2N-1 segments, 2N right exterior
    classification: list[str]
    in_target: np.ndarray
    boundaries: list[float]
    states: list[BoundaryState]
    radiation_residual: float
    scale: complex = 1.0
    target_block: tuple[int, int] | None = None
    meta: dict = field(default_factory=dict)

    def segment_mask(self, j: int) -> np.ndarray:
        return self.interval == j

    def rows(self):
        for xi, ui, ii, ci in zip(self.x, self.u, self.interval, self.classification):
            yield float(xi), complex(ui), int(ii), ci


def _classify(j: int, n_segments: int, target: tuple[int, int] | None) -> str:
    if j == 0:
        return "exterior_left"
    if j == n_segments + 1:
        return "exterior_right"
    kind = "resonator" if j % 2 == 1 else "spacing"
    if target and target[0] <= j <= target[1]:
        return f"{kind}_target"
    return kind


def reconstruct_mode(
    chain: ResonatorChain,
    k: complex,
    delta: complex | None = None,
    *,
    points_per_segment: int = POINTS_PER_SEGMENT,
    margin: float | None = None,
    target: tuple[int, int] | None = None,
    normalize: bool = True,
) -> EigenmodeProfile:
    """Sample the mode for resonance ``k``.

    ``target`` is a block ``(a, b)``; normalisation makes the largest ``|u|``
    over its spacings equal to 1 and real positive.  Without a target the
    whole chain is used.
    """
    if delta is None:
        delta = chain.params.delta
    delta = complex(delta)
    if delta == 0:
        raise ValueError("reconstruct_mode needs a nonzero contrast")
    k = complex(k)
    kb = chain.params.k_b(k)
    xs = chain.boundaries()
    seg = chain.segment_lengths()
    n_seg = len(seg)
    if margin is None:
        margin = max(seg)
    xs_arr, us, ids = [], [], []

    def sample(j: int, x0: float, length: float, state: np.ndarray, kloc: complex, endpoint: bool):
        grid = np.linspace(0.0, length, points_per_segment, endpoint=endpoint)
        for h in grid:
            val = propagation_matrix(kloc, h) @ state
            xs_arr.append(x0 + h)
            us.append(val[0])
            ids.append(j)

    # left exterior, exact outgoing wave
    x1 = xs[0]
    grid = np.linspace(x1 - margin, x1, points_per_segment, endpoint=False)
    for xv in grid:
        xs_arr.append(xv)
        us.append(cmath.exp(-1j * k * xv))
        ids.append(0)
    u = cmath.exp(-1j * k * x1)
    state = np.array([u, -1j * k * u], dtype=complex)
    states: list[BoundaryState] = []
    for j in range(1, n_seg + 1):
        x_left = xs[j - 1]
        if j % 2 == 1:
            # into a resonator at x_{2i-1}: u'|+ = delta u'|-
            inner = np.array([state[0], delta * state[1]])
            states.append(BoundaryState(j, x_left, state[0], state[1], inner[0], inner[1]))
            sample(j, x_left, seg[j - 1], inner, kb, endpoint=False)
            state = propagation_matrix(kb, seg[j - 1]) @ inner
            # out of it at x_{2i}: u'|- = delta u'|+
            outer = np.array([state[0], state[1] / delta])
            states.append(BoundaryState(j + 1, xs[j], state[0], state[1], outer[0], outer[1]))
            state = outer
        else:
            sample(j, x_left, seg[j - 1], state, k, endpoint=False)
            state = propagation_matrix(k, seg[j - 1]) @ state
    x_end = xs[-1]
    sample(n_seg + 1, x_end, margin, state, k, endpoint=True)
    resid_raw = abs(state[1] - 1j * k * state[0])
    x = np.asarray(xs_arr)
    uu = np.asarray(us, dtype=complex)
    interval = np.asarray(ids)
    norm_u = max(float(np.abs(uu).max()), 1e-300)
    residual = resid_raw / (norm_u * max(1.0, abs(k)))
    if residual > RESIDUAL_TOL:
        log.warning("k is not a resonance to tolerance (radiation residual %.3g)", residual)
    classification = [_classify(int(j), n_seg, target) for j in interval]
    in_target = np.array(
        [bool(target) and target[0] <= j <= target[1] for j in interval], dtype=bool
    )
    profile = EigenmodeProfile(
        k=k,
        delta=delta,
        x=x,
        u=uu,
        interval=interval,
        classification=classification,
        in_target=in_target,
        boundaries=list(xs),
        states=states,
        radiation_residual=residual,
        target_block=target,
    )
    if normalize:
        normalize_profile(profile)
    return profile


def normalize_profile(profile: EigenmodeProfile) -> complex:
    """Scale so the largest ``|u|`` on the normalisation spacings is real and 1."""
    if profile.target_block:
        a, b = profile.target_block
        mask = np.array([a <= j <= b and j % 2 == 0 for j in profile.interval])
    else:
        n_seg = len(profile.boundaries) - 1
        mask = (profile.interval >= 1) & (profile.interval <= n_seg)
    if not mask.any():
        mask = np.ones_like(profile.interval, dtype=bool)
    idx = np.flatnonzero(mask)[int(np.argmax(np.abs(profile.u[mask])))]
    peak = profile.u[idx]
    if peak == 0:
        return 1.0
    scale = 1.0 / peak
    profile.u = profile.u * scale
    profile.states = [
        BoundaryState(s.j, s.x, s.u_left * scale, s.du_left * scale, s.u_right * scale, s.du_right * scale)
        for s in profile.states
    ]
    profile.scale = scale
    return scale


# --- leading-order trigonometric prediction ----------------------------------


@dataclass(frozen=True)
class TrigPrediction:
    lam: float
    block: tuple[int, int]
    j0: int
    spacings: tuple[int, ...]  # even segment indices carrying the amplitudes
    beta: np.ndarray
    k0: float

    def amplitude_of(self, j: int) -> float:
        return float(self.beta[self.spacings.index(j)])

    def predict(self, x: np.ndarray, interval: np.ndarray, boundaries: Sequence[float]) -> np.ndarray:
        """``beta_j sin(k0 (x - x_a))`` on the target spacings, 0 elsewhere."""
        x_a = boundaries[self.block[0] - 1]
        out = np.zeros(len(x), dtype=complex)
        for j, bj in zip(self.spacings, self.beta):
            mask = interval == j
            out[mask] = bj * np.sin(self.k0 * (x[mask] - x_a))
        return out


def trig_approximation(
    partition: BlockPartition, spectrum: BlockSpectrum, k0: Wavenumber, lam: float
) -> TrigPrediction:
    hits = []
    for be in spectrum.blocks:
        for i, mu in enumerate(be.eigenvalues):
            if not be.is_zero[i] and abs(mu - lam) <= 1e-9 * max(1.0, abs(lam)):
                hits.append((be, i))
    if not hits:
        raise ValueError(f"{lam} is not a nonzero eigenvalue of C(k0)")
    if len(hits) > 1:
        blocks = [(be.system.block.a, be.system.block.b) for be, _ in hits]
        raise DegenerateEigenvalueError(
            f"eigenvalue {lam} is shared by blocks {blocks}; use the numeric mode only"
        )
    be, i = hits[0]
    blk = be.system.block
    j0 = 2 * math.ceil(blk.a / 2) - 2
    spacings = tuple(j0 + 2 * (q + 1) for q in range(blk.s))
    beta = be.beta[:, i].copy()
    return TrigPrediction(float(be.eigenvalues[i]), (blk.a, blk.b), j0, spacings, beta, k0.value)


@dataclass(frozen=True)
class ShapeFit:
    amplitudes: np.ndarray  # fitted complex amplitude per target spacing
    ratios: np.ndarray  # amplitudes divided by the largest one (real part)
    scale: complex  # global c with u ~ c * prediction
    deviation: float  # sup |u - c pred| over the target spacings
    off_block: float  # sup |u| on spacings outside the target block
    peak: float


def fit_trig_shape(profile: EigenmodeProfile, pred: TrigPrediction) -> ShapeFit:
    x_a = profile.boundaries[pred.block[0] - 1]
    amps = []
    for j in pred.spacings:
        mask = profile.interval == j
        basis = np.sin(pred.k0 * (profile.x[mask] - x_a))
        amps.append(complex(np.vdot(basis, profile.u[mask]) / np.vdot(basis, basis)))
    amps = np.asarray(amps)
    ref = amps[int(np.argmax(np.abs(amps)))]
    ratios = (amps / ref).real
    full = pred.predict(profile.x, profile.interval, profile.boundaries)
    tmask = np.isin(profile.interval, pred.spacings)
    c = complex(np.vdot(full[tmask], profile.u[tmask]) / np.vdot(full[tmask], full[tmask]))
    deviation = float(np.abs(profile.u[tmask] - c * full[tmask]).max())
    n_seg = len(profile.boundaries) - 1
    off = [
        j for j in range(2, n_seg + 1, 2) if not (pred.block[0] <= j <= pred.block[1])
    ]
    omask = np.isin(profile.interval, off)
    off_block = float(np.abs(profile.u[omask]).max()) if omask.any() else 0.0
    peak = float(np.abs(profile.u[tmask]).max())
    return ShapeFit(amps, ratios, c, deviation, off_block, peak)


def estimate_gamma(
    p1: EigenmodeProfile, p2: EigenmodeProfile, delta1: float, delta2: float
) -> dict[int, float]:
    """Per-interval exponent ``gamma`` with ``max|u| ~ delta^{gamma/2}``."""
    out = {}
    for j in sorted(set(p1.interval.tolist()) & set(p2.interval.tolist())):
        a = float(np.abs(p1.u[p1.interval == j]).max())
        b = float(np.abs(p2.u[p2.interval == j]).max())
        if a > 0 and b > 0:
            out[j] = 2 * math.log(a / b) / math.log(delta1 / delta2)
    return out


# --- k0 = 0 recall -------------------------------------------------------------


@dataclass(frozen=True)
class SubwavelengthComparison:
    profile: EigenmodeProfile
    predicted: np.ndarray
    error: float
    constant_mode: bool


def piecewise_linear_mode(chain: ResonatorChain, alpha: Sequence[float], x: np.ndarray) -> np.ndarray:
    """``alpha_i`` on resonator ``i``; linear interpolation across each spacing."""
    xs = chain.boundaries()
    N = chain.N
    out = np.empty(len(x))
    for idx, xv in enumerate(x):
        if xv <= xs[0]:
            out[idx] = alpha[0]
            continue
        if xv >= xs[-1]:
            out[idx] = alpha[-1]
            continue
        for i in range(N):
            if xs[2 * i] <= xv <= xs[2 * i + 1]:
                out[idx] = alpha[i]
                break
            if i < N - 1 and xs[2 * i + 1] < xv < xs[2 * i + 2]:
                slope = (alpha[i + 1] - alpha[i]) / (xs[2 * i + 2] - xs[2 * i + 1])
                out[idx] = alpha[i] + slope * (xv - xs[2 * i + 1])
                break
    return out


def subwavelength_mode(
    chain: ResonatorChain, lam: float, alpha: Sequence[float], delta: float, k: complex | None = None
) -> SubwavelengthComparison:
    """Compare the numeric mode near ``k ~ sqrt(lam delta / r)`` with the piecewise-linear recall."""
    alpha = np.asarray(alpha, dtype=float)
    constant = lam == 0 or bool(np.allclose(alpha, alpha[0]))
    if constant:
        log.warning("lambda = 0: the mode is the constant kernel vector")
    t = build_structural_vector(chain)
    r = float(chain.params.r)
    nu = 2 * delta / (delta + r)
    if k is None:
        seed = math.sqrt(lam * delta / r) if lam > 0 else 1e-12
        k = newton_refine(t, nu, seed).root
    prof = reconstruct_mode(chain, k, delta, normalize=False)
    inside = (prof.interval >= 1) & (prof.interval <= 2 * chain.N - 1)
    pred = piecewise_linear_mode(chain, alpha, prof.x).astype(complex)
    c = complex(np.vdot(pred[inside], prof.u[inside]) / np.vdot(pred[inside], pred[inside]))
    prof.u = prof.u / c
    err = float(np.abs(prof.u[inside] - pred[inside]).max() / np.abs(pred[inside]).max())
    return SubwavelengthComparison(prof, pred, err, constant)
