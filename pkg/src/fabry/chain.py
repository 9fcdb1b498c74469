"""Chain geometry, the structural vector and resonant index sets.

All geometric quantities are kept as :class:`fractions.Fraction` by default so
that the membership test ``t_j * k0 in pi*Z`` is decided exactly.  A float
mode with a fixed tolerance exists for inputs that are not rational.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from pathlib import Path
from typing import Any, Iterable, Sequence

FLOAT_TOL = 1e-9

Number = Fraction | float


def parse_rational(value: Any, *, exact: bool = True, name: str = "value") -> Number:
    """Parse ``"p/q"``, decimal strings, ints and Fractions.

    In exact mode a bare float is only accepted when it is integral; anything
    else must come in as a string so that e.g. ``0.3`` means ``3/10``.
    """
    if isinstance(value, Fraction):
        return value if exact else float(value)
    if isinstance(value, bool):
        raise ValueError(f"{name}: booleans are not numbers")
    if isinstance(value, int):
        return Fraction(value) if exact else float(value)
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"{name}: {value!r} is not finite")
        if not exact:
            return value
        if value.is_integer():
            return Fraction(int(value))
        raise ValueError(
            f"{name}: float {value!r} is not accepted in exact mode; "
            f'pass it as a string (e.g. "{value!r}") or enable float mode'
        )
    if isinstance(value, str):
        text = value.strip()
        try:
            frac = Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            if exact:
                raise ValueError(
                    f"{name}: {value!r} is not a rational number; "
                    "exact mode needs 'p/q' or decimal strings"
                ) from exc
            return float(text)
        return frac if exact else float(frac)
    raise ValueError(f"{name}: cannot interpret {value!r} as a number")


def parse_delta(value: Any) -> complex:
    """Contrast from a number, a numeric string or a ``[re, im]`` pair."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError("delta as a list must be [re, im]")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace(" ", ""))
    return complex(value)


@dataclass(frozen=True)
class MaterialParams:
    delta: complex
    r: Number = Fraction(1)
    v: Number = Fraction(1)

    def __post_init__(self) -> None:
        if not self.r > 0:
            raise ValueError(f"wave-speed ratio r must be positive, got {self.r}")
        if not self.v > 0:
            raise ValueError(f"background speed v must be positive, got {self.v}")
        if not cmath_isfinite(self.delta):
            raise ValueError("delta must be finite")

    @property
    def sigma(self) -> complex:
        return self.delta / float(self.r)

    @property
    def nu(self) -> complex:
        return 2 * self.delta / (self.delta + float(self.r))

    @property
    def v_b(self) -> float:
        return float(self.v) / float(self.r)

    def omega(self, k: complex) -> complex:
        return k * float(self.v)

    def k_b(self, k: complex) -> complex:
        return k * float(self.r)


def cmath_isfinite(z: complex) -> bool:
    return math.isfinite(z.real) and math.isfinite(z.imag)


@dataclass(frozen=True)
class StructuralVector:
    """``t = (r l_1, s_1, r l_2, ..., s_{N-1}, r l_N)``; indices are 1-based in the API."""

    values: tuple[Number, ...]
    exact: bool = True

    def __post_init__(self) -> None:
        if len(self.values) % 2 != 1:
            raise ValueError("structural vector must have odd length 2N-1")
        if any(not v > 0 for v in self.values):
            raise ValueError("all entries of t must be positive")

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, j: int) -> Number:
        """1-based access, ``t[1]`` is the first resonator."""
        if not 1 <= j <= len(self.values):
            raise IndexError(f"index {j} outside [1, {len(self.values)}]")
        return self.values[j - 1]

    @property
    def N(self) -> int:
        return (len(self.values) + 1) // 2

    def floats(self) -> list[float]:
        return [float(v) for v in self.values]

    @classmethod
    def from_values(cls, values: Iterable[Any], *, exact: bool = True) -> StructuralVector:
        parsed = tuple(parse_rational(v, exact=exact, name="t") for v in values)
        return cls(parsed, exact=exact)


@dataclass(frozen=True)
class ResonatorChain:
    lengths: tuple[Number, ...]
    spacings: tuple[Number, ...]
    params: MaterialParams
    offset: Number = Fraction(0)

    def __post_init__(self) -> None:
        if len(self.lengths) < 1:
            raise ValueError("a chain needs at least one resonator")
        if len(self.spacings) != len(self.lengths) - 1:
            raise ValueError("need exactly N-1 spacings for N resonators")
        if any(not l > 0 for l in self.lengths) or any(not s > 0 for s in self.spacings):
            raise ValueError("lengths and spacings must be positive")

    @property
    def N(self) -> int:
        return len(self.lengths)

    @property
    def exact(self) -> bool:
        vals = (*self.lengths, *self.spacings, self.params.r)
        return all(isinstance(v, Fraction) for v in vals)

    def boundaries(self) -> list[float]:
        """Physical points ``x_1 < ... < x_{2N}`` (0-based list)."""
        xs = [float(self.offset)]
        for i, ell in enumerate(self.lengths):
            xs.append(xs[-1] + float(ell))
            if i < len(self.spacings):
                xs.append(xs[-1] + float(self.spacings[i]))
        return xs

    def segment_lengths(self) -> list[float]:
        """Physical lengths of the 2N-1 segments in order (resonator, spacing, ...)."""
        out: list[float] = []
        for i, ell in enumerate(self.lengths):
            out.append(float(ell))
            if i < len(self.spacings):
                out.append(float(self.spacings[i]))
        return out

    @classmethod
    def from_structural(
        cls, t: StructuralVector, params: MaterialParams, offset: Number = Fraction(0)
    ) -> ResonatorChain:
        r = params.r
        lengths = tuple(t.values[i] / r for i in range(0, len(t), 2))
        spacings = tuple(t.values[i] for i in range(1, len(t), 2))
        return cls(lengths, spacings, params, offset)


@dataclass(frozen=True)
class Wavenumber:
    """``k0 = q * pi``; the float value is derived."""

    q: Number

    @property
    def value(self) -> float:
        return float(self.q) * math.pi

    @property
    def exact(self) -> bool:
        return isinstance(self.q, Fraction)

    def __str__(self) -> str:
        return f"{self.q}*pi"

    @classmethod
    def parse(cls, value: Any, *, exact: bool = True) -> Wavenumber:
        return cls(parse_rational(value, exact=exact, name="k0_over_pi"))


@dataclass(frozen=True)
class Block:
    """Maximal run ``[a, b]`` of resonant indices (1-based, inclusive)."""

    a: int
    b: int

    @property
    def n(self) -> int:
        return self.b - self.a + 1

    @property
    def xi(self) -> int:
        return self.a % 2

    @property
    def eta(self) -> int:
        return self.b % 2

    @property
    def even_indices(self) -> list[int]:
        return [j for j in range(self.a, self.b + 1) if j % 2 == 0]

    @property
    def odd_indices(self) -> list[int]:
        return [j for j in range(self.a, self.b + 1) if j % 2 == 1]

    @property
    def s(self) -> int:
        return self.b // 2 - (self.a - 1) // 2

    @property
    def l(self) -> int:
        return len(self.odd_indices)

    @property
    def sta(self) -> int:
        """First row (1-based) of the block inside C(k0)."""
        return self.a // 2 + 1

    @property
    def end(self) -> int:
        return -(-self.b // 2)

    @property
    def n_nonzero(self) -> int:
        return self.n // 2


@dataclass(frozen=True)
class BlockPartition:
    I: tuple[int, ...]
    blocks: tuple[Block, ...]
    multiples: dict[int, int] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.I)

    @property
    def p(self) -> int:
        return len(self.blocks)

    @property
    def m(self) -> int:
        return sum(b.n_nonzero for b in self.blocks)

    def as_dict(self) -> dict[str, Any]:
        return {
            "I": list(self.I),
            "n": self.n,
            "m": self.m,
            "blocks": [
                {"a": b.a, "b": b.b, "n": b.n, "xi": b.xi, "eta": b.eta} for b in self.blocks
            ],
            "m_j": {str(j): self.multiples[j] for j in self.I},
        }


def build_structural_vector(chain: ResonatorChain) -> StructuralVector:
    exact = chain.exact
    r = chain.params.r
    values: list[Number] = []
    for i, ell in enumerate(chain.lengths):
        values.append(r * ell)
        if i < len(chain.spacings):
            values.append(chain.spacings[i])
    if not exact:
        values = [float(v) for v in values]
    return StructuralVector(tuple(values), exact=exact)


def _integer_multiple(tj: Number, q: Number, exact: bool) -> int | None:
    """Return ``m`` with ``tj * q == m`` or None."""
    prod = tj * q
    if exact:
        if prod.denominator == 1:
            return int(prod.numerator)
        return None
    prod = float(prod)
    m = round(prod)
    if abs(prod - m) <= FLOAT_TOL:
        return int(m)
    return None


def _is_exact(t: StructuralVector, k0: Wavenumber) -> bool:
    return t.exact and k0.exact


def t_of_k(t: StructuralVector, k0: Wavenumber, j: int) -> Number:
    """``t_j`` when ``pi | t_j k0``, else ``math.inf``."""
    tj = t[j]
    if _integer_multiple(tj, k0.q, _is_exact(t, k0)) is None:
        return math.inf
    return tj


def resonant_index_set(t: StructuralVector, k0: Wavenumber) -> BlockPartition:
    exact = _is_exact(t, k0)
    if exact:
        q = k0.q
    else:
        q = float(k0.q)
    multiples: dict[int, int] = {}
    for j in range(1, len(t) + 1):
        m = _integer_multiple(t[j], q, exact)
        if m is not None:
            multiples[j] = m
    I = tuple(sorted(multiples))
    blocks: list[Block] = []
    start = prev = None
    for j in I:
        if start is None:
            start = prev = j
        elif j == prev + 1:
            prev = j
        else:
            blocks.append(Block(start, prev))
            start = prev = j
    if start is not None:
        blocks.append(Block(start, prev))
    return BlockPartition(I, tuple(blocks), multiples)


def enumerate_E(t: StructuralVector, kmax_over_pi: Any) -> list[Wavenumber]:
    """All ``k = q*pi`` in ``(0, kmax]`` at which some segment is resonant."""
    exact = t.exact and not isinstance(kmax_over_pi, float)
    bound = parse_rational(kmax_over_pi, exact=exact, name="kmax_over_pi")
    if not bound > 0:
        raise ValueError("kmax must be positive")
    found: set = set()
    for tj in t.values:
        m = 1
        while True:
            q = Fraction(m) / tj if exact else m / float(tj)
            if q > bound + (0 if exact else FLOAT_TOL):
                break
            found.add(q if exact else round(q, 12))
            m += 1
    return [Wavenumber(q) for q in sorted(found)]


@dataclass(frozen=True)
class ChainConfig:
    chain: ResonatorChain
    t: StructuralVector
    k0: Wavenumber | None
    raw: dict[str, Any] = field(default_factory=dict, compare=False)


def load_config(source: str | Path | dict[str, Any], *, exact: bool | None = None) -> ChainConfig:
    """Read a JSON chain config (path or already-parsed dict)."""
    if isinstance(source, dict):
        data = dict(source)
    else:
        data = json.loads(Path(source).read_text())
    if exact is None:
        exact = not data.get("float_mode", False)
    r = parse_rational(data.get("r", "1"), exact=exact, name="r")
    v = parse_rational(data.get("v", "1"), exact=exact, name="v")
    delta = parse_delta(data.get("delta", 0.0))
    params = MaterialParams(delta=delta, r=r, v=v)
    offset = parse_rational(data.get("offset", "0"), exact=exact, name="offset")
    if "t" in data:
        t = StructuralVector.from_values(data["t"], exact=exact)
        chain = ResonatorChain.from_structural(t, params, offset)
    else:
        lengths = tuple(parse_rational(x, exact=exact, name="lengths") for x in data["lengths"])
        spacings = tuple(
            parse_rational(x, exact=exact, name="spacings") for x in data.get("spacings", [])
        )
        chain = ResonatorChain(lengths, spacings, params, offset)
        t = build_structural_vector(chain)
    k0 = None
    if "k0_over_pi" in data:
        k0 = Wavenumber.parse(data["k0_over_pi"], exact=exact)
    return ChainConfig(chain=chain, t=t, k0=k0, raw=data)


def structural_from_floats(values: Sequence[float]) -> StructuralVector:
    return StructuralVector(tuple(float(v) for v in values), exact=False)
