"""Seeded random streams and the small family of laws the constructions need.

Every sampler is exact in distribution:

* ``beta1:θ`` is the beta(θ, 1) law, drawn as ``U**(1/θ)``;
* ``gamma:θ,λ`` has density ``λ^θ x^(θ-1) e^(-λx) / Γ(θ)``;
* ``exp:λ`` is ``gamma:1,λ``;
* ``invgamma:θ,λ`` is the law of ``1/G`` for ``G ~ gamma:θ,λ``;
* ``point:c`` is the point mass at ``c >= 0`` (degenerate jumps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

__all__ = [
    "ParameterError",
    "RngStream",
    "DistSpec",
    "BetaTheta1",
    "Gamma",
    "Exponential",
    "InverseGamma",
    "PointMass",
    "sample",
    "beta_gamma_compose",
]

_MASK64 = (1 << 64) - 1
_TWO53 = float(1 << 53)


class ParameterError(ValueError):
    """Raised for out-of-range distribution or model parameters."""


class RngStream:
    """A counter-based random stream identified by ``(seed, stream)``.

    Backed by Philox-4x64 with the 128-bit key set to ``(seed, stream)``, so
    distinct stream ids give non-overlapping, independent sequences and the
    same pair reproduces the same draws on every platform. A single stream
    must not be shared between threads.
    """

    __slots__ = ("seed", "stream", "generator")

    def __init__(self, seed: int, stream: int = 0):
        seed = int(seed)
        stream = int(stream)
        if not (0 <= seed <= _MASK64 and 0 <= stream <= _MASK64):
            raise ParameterError("seed and stream id must be unsigned 64-bit integers")
        self.seed = seed
        self.stream = stream
        bitgen = np.random.Philox(key=np.array([seed, stream], dtype=np.uint64))
        self.generator = np.random.Generator(bitgen)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream})"

    def derive(self, *labels: int) -> "RngStream":
        """A new stream with the same seed and a stream id hashed from ``labels``."""
        ss = np.random.SeedSequence([self.stream, *[int(v) & _MASK64 for v in labels]])
        return RngStream(self.seed, int(ss.generate_state(1, np.uint64)[0]))

    def uniform(self, size=None):
        """Uniform draws on the open interval (0, 1)."""
        k = self.generator.integers(0, 1 << 53, size=size, dtype=np.int64)
        return (k + 0.5) / _TWO53

    def exponential(self, size=None):
        return self.generator.standard_exponential(size=size)

    def normal(self, size=None):
        return self.generator.standard_normal(size=size)

    def gamma(self, shape: float, size=None):
        return self.generator.standard_gamma(shape, size=size)

    def poisson(self, mean: float, size=None):
        return self.generator.poisson(mean, size=size)

    def permutation(self, n: int):
        return self.generator.permutation(n)


@dataclass(frozen=True)
class DistSpec:
    """A parametric law. Build with the helper constructors or :meth:`parse`."""

    kind: str
    params: tuple = field(default=())

    _ARITY = {"beta1": 1, "gamma": 2, "exp": 1, "invgamma": 2, "point": 1}

    def __post_init__(self):
        if self.kind not in self._ARITY:
            raise ParameterError(f"unknown distribution kind {self.kind!r}")
        params = tuple(float(p) for p in self.params)
        if len(params) != self._ARITY[self.kind]:
            raise ParameterError(f"{self.kind} takes {self._ARITY[self.kind]} parameter(s)")
        if any(not math.isfinite(p) for p in params):
            raise ParameterError("parameters must be finite")
        if self.kind == "point":
            if params[0] < 0:
                raise ParameterError("point mass location must be non-negative")
        elif any(p <= 0 for p in params):
            raise ParameterError(f"{self.kind} parameters must be strictly positive")
        object.__setattr__(self, "params", params)

    # text form ----------------------------------------------------------------

    @classmethod
    def parse(cls, text: str) -> "DistSpec":
        """Parse the canonical text form, e.g. ``gamma:0.5,0.5``."""
        try:
            kind, _, rest = text.strip().partition(":")
            params = tuple(float(v) for v in rest.split(",")) if rest else ()
        except ValueError as exc:
            raise ParameterError(f"cannot parse distribution {text!r}") from exc
        return cls(kind.strip().lower(), params)

    def __str__(self):
        return f"{self.kind}:" + ",".join(repr(p) for p in self.params)

    # law ----------------------------------------------------------------------

    def sample(self, rng: RngStream, size=None):
        k, p = self.kind, self.params
        if k == "beta1":
            return rng.uniform(size) ** (1.0 / p[0])
        if k == "gamma":
            return rng.gamma(p[0], size) / p[1]
        if k == "exp":
            return rng.exponential(size) / p[0]
        if k == "invgamma":
            g = rng.gamma(p[0], size) / p[1]
            return 1.0 / g
        return np.full(size, p[0]) if size is not None else p[0]

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        k, p = self.kind, self.params
        with np.errstate(divide="ignore", invalid="ignore"):
            if k == "beta1":
                out = np.clip(x, 0.0, 1.0) ** p[0]
            elif k == "gamma":
                out = special.gammainc(p[0], p[1] * np.maximum(x, 0.0))
            elif k == "exp":
                out = -np.expm1(-p[0] * np.maximum(x, 0.0))
            elif k == "invgamma":
                out = np.where(x > 0, special.gammaincc(p[0], p[1] / np.where(x > 0, x, 1.0)), 0.0)
            else:
                out = (x >= p[0]).astype(np.float64)
        return out[()] if out.ndim == 0 else out

    def sf(self, x):
        """Tail probability ``P(X > x)``, computed without cancellation."""
        x = np.asarray(x, dtype=np.float64)
        k, p = self.kind, self.params
        with np.errstate(divide="ignore", invalid="ignore"):
            if k == "beta1":
                out = 1.0 - np.clip(x, 0.0, 1.0) ** p[0]
            elif k == "gamma":
                out = special.gammaincc(p[0], p[1] * np.maximum(x, 0.0))
            elif k == "exp":
                out = np.exp(-p[0] * np.maximum(x, 0.0))
            elif k == "invgamma":
                out = np.where(x > 0, special.gammainc(p[0], p[1] / np.where(x > 0, x, 1.0)), 1.0)
            else:
                out = (x < p[0]).astype(np.float64)
        return out[()] if out.ndim == 0 else out

    def ppf(self, q):
        q = np.asarray(q, dtype=np.float64)
        k, p = self.kind, self.params
        if k == "beta1":
            out = q ** (1.0 / p[0])
        elif k == "gamma":
            out = special.gammaincinv(p[0], q) / p[1]
        elif k == "exp":
            out = -np.log1p(-q) / p[0]
        elif k == "invgamma":
            out = p[1] / special.gammainccinv(p[0], q)
        else:
            out = np.full_like(q, p[0])
        return out[()] if out.ndim == 0 else out

    def isf(self, q):
        """Upper quantile: the ``x`` with ``P(X > x) = q``."""
        q = np.asarray(q, dtype=np.float64)
        k, p = self.kind, self.params
        if k == "beta1":
            out = (1.0 - q) ** (1.0 / p[0])
        elif k == "gamma":
            out = special.gammainccinv(p[0], q) / p[1]
        elif k == "exp":
            out = -np.log(q) / p[0]
        elif k == "invgamma":
            out = p[1] / special.gammaincinv(p[0], q)
        else:
            out = np.full_like(q, p[0])
        return out[()] if out.ndim == 0 else out

    @property
    def mean(self) -> float:
        k, p = self.kind, self.params
        if k == "beta1":
            return p[0] / (p[0] + 1.0)
        if k == "gamma":
            return p[0] / p[1]
        if k == "exp":
            return 1.0 / p[0]
        if k == "invgamma":
            return p[1] / (p[0] - 1.0) if p[0] > 1.0 else math.inf
        return p[0]

    @property
    def is_positive(self) -> bool:
        """True when the law puts no mass at zero."""
        return not (self.kind == "point" and self.params[0] == 0.0)


def BetaTheta1(theta: float) -> DistSpec:
    return DistSpec("beta1", (theta,))


def Gamma(shape: float, rate: float = 1.0) -> DistSpec:
    return DistSpec("gamma", (shape, rate))


def Exponential(rate: float = 1.0) -> DistSpec:
    return DistSpec("exp", (rate,))


def InverseGamma(shape: float, rate: float = 1.0) -> DistSpec:
    return DistSpec("invgamma", (shape, rate))


def PointMass(value: float) -> DistSpec:
    return DistSpec("point", (value,))


def sample(spec: DistSpec, rng: RngStream, size=None):
    """Draw from ``spec``; a scalar when ``size`` is None."""
    out = spec.sample(rng, size)
    if size is None:
        return float(out)
    return out


def beta_gamma_compose(theta: float, n: int, rng: RngStream):
    """Draw ``γ ~ gamma(θ, 1)`` and ``ε ~ exp(1)`` and return ``(γ/(γ+ε), γ+ε)``.

    The ratio is beta(θ, 1), the sum is gamma(θ+1, 1), and the two are
    independent.
    """
    if theta <= 0:
        raise ParameterError("theta must be positive")
    if n < 1:
        raise ParameterError("n must be at least 1")
    g = rng.gamma(theta, n)
    e = rng.exponential(n)
    total = g + e
    return g / total, total
