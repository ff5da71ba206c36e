"""Analytic predictions for eigenvector components of the ensemble.

All densities are densities of the rescaled component ``w = C * psi``, where
the normalisation constant C is selected by a :class:`NormalizationMode`:

* ``unit``: C = 1, the plain normalised components,
* ``bulk``: C = N**(gamma/2), for which the bulk is a Cauchy law,
* ``tail``: C = N**(1 - gamma/2), which collapses the large-component tail.

Two constants named after the letter gamma appear below: ``gamma_exp`` is the
ensemble exponent, ``EULER_GAMMA`` is Euler's constant.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .ensemble import EnsembleParams
from .errors import DomainError
from .specfun import (
    EULER_GAMMA,
    QuadratureSpec,
    bessel_k01,
    gamma_fn,
    integrate,
    tricomi_u,
)

MODES = ("unit", "bulk", "tail")

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def normalization_constant(tag, n, gamma_exp):
    if tag == "unit":
        return 1.0
    if tag == "bulk":
        return float(n) ** (gamma_exp / 2.0)
    if tag == "tail":
        return float(n) ** (1.0 - gamma_exp / 2.0)
    raise DomainError(f"unknown normalisation mode {tag!r}; choose from {MODES}")


@dataclass(frozen=True)
class NormalizationMode:
    tag: str
    c_value: float

    @classmethod
    def of(cls, tag, params):
        return cls(tag, normalization_constant(tag, params.n, params.gamma_exp))


def level_density(energy):
    """Density of states for gamma_exp > 1: the standard normal density."""
    energy = np.asarray(energy, dtype=float)
    return np.exp(-0.5 * energy**2) / _SQRT_2PI


def spreading_width(energy, params):
    """Fermi golden-rule width pi * eps^2 * rho(E) / N^(gamma-1)."""
    return (math.pi * params.epsilon**2 * level_density(energy)
            / float(params.n) ** (params.gamma_exp - 1.0))


@dataclass(frozen=True)
class TheoryContext:
    """Derived constants for one parameter set, normalisation and energy."""

    params: EnsembleParams
    mode: NormalizationMode
    energy: float
    rho: float
    width: float
    a_const: float
    delta: float
    b_const: float

    @classmethod
    def build(cls, params, mode="unit", energy=0.0):
        if isinstance(mode, str):
            mode = NormalizationMode.of(mode, params)
        n, g, eps = float(params.n), params.gamma_exp, params.epsilon
        return cls(
            params=params,
            mode=mode,
            energy=float(energy),
            rho=float(level_density(energy)),
            width=float(spreading_width(energy, params)),
            a_const=mode.c_value**2 * eps**2 / n**g,
            delta=math.sqrt(math.pi) * eps**2 / (math.sqrt(2.0) * n ** (g - 1.0)),
            b_const=math.sqrt(math.pi) * eps / (2.0 * math.sqrt(2.0)),
        )

    def as_dict(self):
        return {
            "n": self.params.n, "gamma_exp": self.params.gamma_exp,
            "epsilon": self.params.epsilon, "mode": self.mode.tag,
            "C": self.mode.c_value, "energy": self.energy, "rho": self.rho,
            "width": self.width, "a": self.a_const, "delta": self.delta,
            "b": self.b_const,
        }


def convert_density(w, density, c_from, c_to):
    """Change normalisation: returns ``(w', p')`` for w' = w*c_to/c_from."""
    ratio = c_to / c_from
    return np.asarray(w) * ratio, np.asarray(density) / ratio


def mean_square_component(energy, e_site, ctx):
    """Breit-Wigner profile <|w_j(E)|^2> given the site energy e_j."""
    width = spreading_width(energy, ctx.params)
    return ctx.a_const / ((energy - e_site) ** 2 + width**2)


_GENERAL_SPEC = QuadratureSpec(abs_tol=1e-300, rel_tol=1e-12, max_subdivisions=400)


def _general_one(x, energy, a, width, spec):
    # substitution e = E + width*sinh(t) makes the integrand smooth
    c = x * x * width * width / (2.0 * a)

    def integrand(t):
        sh = math.sinh(t)
        return (1.0 + sh * sh) * math.exp(-c * sh * sh - 0.5 * (energy + width * sh) ** 2)

    t_max = math.asinh((40.0 + abs(energy)) / width)
    t_centre = math.asinh(-energy / width)
    value, _ = integrate(integrand, -t_max, t_max, spec, points=[0.0, t_centre])
    return width**2 / (2.0 * math.pi * math.sqrt(a)) * math.exp(-c) * value


def distribution_general(x, energy, ctx, spec=None):
    """Component density at energy E by quadrature over the site energy.

    Averages the local Gaussian (variance from the Breit-Wigner profile) over
    the normal density of the diagonal entries.  Works for any E.
    """
    spec = spec or _GENERAL_SPEC
    width = float(spreading_width(energy, ctx.params))
    xs = np.asarray(x, dtype=float)
    out = np.array([_general_one(abs(v), energy, ctx.a_const, width, spec)
                    for v in xs.ravel()])
    return out.reshape(xs.shape) if xs.ndim else float(out[0])


def distribution_center(x, ctx):
    """Closed-form component density at the band centre E = 0."""
    if ctx.energy != 0.0:
        raise DomainError("the closed form holds at E = 0 only; use distribution_general")
    a, delta = ctx.a_const, ctx.delta
    x = np.asarray(x, dtype=float)
    zeta = delta**2 / (4.0 * a) * (x * x + a)
    k0, k1 = bessel_k01(zeta, scaled=True)
    # exp(-zeta) * K(zeta) = exp(-2 zeta) * scaled K
    return delta**2 / (4.0 * math.pi * math.sqrt(a)) * (k0 + k1) \
        * np.exp(-2.0 * zeta + 0.5 * delta**2)


def distribution_bulk(y, epsilon):
    """Cauchy law of the bulk-normalised component."""
    y = np.asarray(y, dtype=float)
    return epsilon / (math.pi * (y * y + epsilon**2))


def bulk_cdf(y, epsilon):
    return 0.5 + np.arctan(np.asarray(y, dtype=float) / epsilon) / math.pi


def tail_scaled(z, epsilon):
    """N**(gamma-1) times the tail law; independent of N."""
    z = np.asarray(z, dtype=float)
    if np.any(z == 0):
        raise DomainError("the tail law diverges at z = 0")
    b = math.sqrt(math.pi) * epsilon / (2.0 * math.sqrt(2.0))
    arg = b * b * z * z
    k0, k1 = bessel_k01(arg, scaled=True)
    return 2.0 * math.sqrt(2.0) * b**3 / (math.pi * math.sqrt(math.pi)) \
        * (k0 + k1) * np.exp(-2.0 * arg)


def distribution_tail(z, ctx):
    """Large-component law in the tail normalisation (needs gamma_exp < 2)."""
    params = ctx.params
    if params.gamma_exp >= 2:
        raise DomainError("the tail law exists only for gamma_exp < 2")
    return tail_scaled(z, params.epsilon) / float(params.n) ** (params.gamma_exp - 1.0)


# ---------------------------------------------------------------------------
# moments


def moment_exact(q, ctx):
    """N * <|w|^(2q)> at the band centre, via the Tricomi function.

    With the ``unit`` mode this is the moment sum_j <|psi_j|^(2q)>.
    """
    q = float(q)
    if q <= -0.5:
        raise DomainError(f"moment of order q={q} diverges (need q > -1/2)")
    a, delta, n = ctx.a_const, ctx.delta, float(ctx.params.n)
    u = tricomi_u(0.5, 1.5 - q, 0.5 * delta**2)
    return (2.0 ** (q - 0.5) * a**q * n * gamma_fn(q + 0.5)
            / (math.sqrt(math.pi) * delta ** (2.0 * q - 1.0)) * u)


def scaling_exponent(q, gamma_exp):
    """tau(q) with I_q ~ N^(-tau(q))."""
    if q < 0.5:
        return gamma_exp * q - 1.0
    return (q - 1.0) * (2.0 - gamma_exp)


def moment_asymptotic(q, params):
    """Large-N scaling ``(tau, prefactor)`` of the moments, q != 1/2."""
    q = float(q)
    if q == 0.5:
        raise DomainError("q = 1/2 carries a log N; use moment_half")
    if q <= -0.5:
        raise DomainError(f"moment of order q={q} diverges (need q > -1/2)")
    eps = params.epsilon
    tau = scaling_exponent(q, params.gamma_exp)
    if q < 0.5:
        pref = eps ** (2 * q) / math.pi * gamma_fn(q + 0.5) * gamma_fn(0.5 - q)
    else:
        b = math.sqrt(math.pi) * eps / (2.0 * math.sqrt(2.0))
        pref = (gamma_fn(q - 0.5) * gamma_fn(q + 0.5)
                / (math.pi * b ** (2 * q - 2) * 2.0 ** (q - 2) * gamma_fn(q)))
    return tau, pref


def moment_correction(q, params):
    """Finite-N factor multiplying the small-q prefactor, -1/2 < q < 1/2."""
    q = float(q)
    if not -0.5 < q < 0.5:
        raise DomainError("the correction factor is defined for -1/2 < q < 1/2")
    if q == 0.0:
        return 1.0
    eps, g, n = params.epsilon, params.gamma_exp, float(params.n)
    coef = (math.pi ** (1.0 - q) * eps ** (2.0 - 4.0 * q) * gamma_fn(q - 0.5)
            / (2.0 ** (1.0 - 2.0 * q) * gamma_fn(q) * gamma_fn(0.5 - q)))
    return 1.0 + coef * n ** (-(g - 1.0) * (1.0 - 2.0 * q))


def half_moment_prefactor(params):
    """Prefactor of N^(1-gamma/2) in the q = 1/2 moment; grows like log N."""
    eps, g, n = params.epsilon, params.gamma_exp, float(params.n)
    bracket = (2.0 * (g - 1.0) * math.log(n) - math.log(math.pi * eps**4 / 16.0)
               - EULER_GAMMA)
    return eps / math.pi * bracket


def moment_half(params):
    """Moment of order q = 1/2, including its logarithmic growth."""
    return float(params.n) ** (1.0 - params.gamma_exp / 2.0) * half_moment_prefactor(params)


@dataclass
class MomentEntry:
    q: float
    value: float
    scaling_tau: float
    prefactor: float
    correction: float = None
    stderr: float = None


@dataclass
class MomentSet:
    entries: list = field(default_factory=list)

    def by_q(self):
        return {e.q: e for e in self.entries}

    def qs(self):
        return [e.q for e in self.entries]


def theory_moments(q_list, params):
    """Exact moments with their asymptotic exponent, prefactor and correction."""
    ctx = TheoryContext.build(params, "unit")
    entries = []
    for q in q_list:
        q = float(q)
        value = moment_exact(q, ctx)
        tau = scaling_exponent(q, params.gamma_exp)
        if q == 0.5:
            pref = half_moment_prefactor(params)
        else:
            pref = moment_asymptotic(q, params)[1]
        corr = moment_correction(q, params) if -0.5 < q < 0.5 else None
        entries.append(MomentEntry(q, value, tau, pref, corr))
    return MomentSet(entries)
