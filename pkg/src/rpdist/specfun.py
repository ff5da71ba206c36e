"""Special functions and quadrature used by the analytic formulas.

Only real arguments are supported.  ``bessel_k`` is vectorised over ``z``;
the hypergeometric functions are scalar.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _scipy_integrate

from .errors import AccuracyError, DomainError

EULER_GAMMA = 0.57721566490153286061

_EPS = 1e-16
_K_SERIES_MAX = 2.0
_MAX_ITER = 10000


class UnderflowWarning(RuntimeWarning):
    """K-Bessel values flushed to zero because exp(-z) underflows."""


# ---------------------------------------------------------------------------
# quadrature

SCHEMES = ("adaptive", "gauss-legendre")


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and method for :func:`integrate`.

    ``scheme="adaptive"`` uses globally adaptive Gauss-Kronrod subdivision
    (QUADPACK); ``"gauss-legendre"`` uses a composite fixed-order rule on
    the mapped interval with ``max_subdivisions`` panels.
    """

    scheme: str = "adaptive"
    abs_tol: float = 1e-14
    rel_tol: float = 1e-10
    max_subdivisions: int = 60

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown quadrature scheme {self.scheme!r}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("abs_tol and rel_tol must be positive")
        if int(self.max_subdivisions) < 1:
            raise DomainError("max_subdivisions must be a positive integer")

    def tolerance(self, value):
        return max(self.abs_tol, self.rel_tol * abs(value))


DEFAULT_QUADRATURE = QuadratureSpec()


def _mapped(f, a, b):
    """Return (g, lo, hi) with int_a^b f = int_lo^hi g on a finite interval."""
    if np.isfinite(a) and np.isfinite(b):
        return f, a, b
    if np.isfinite(a):
        def g(t):
            return f(a + t / (1.0 - t)) / (1.0 - t) ** 2
        return g, 0.0, 1.0
    if np.isfinite(b):
        def g(t):
            return f(b - t / (1.0 - t)) / (1.0 - t) ** 2
        return g, 0.0, 1.0

    def g(t):
        return f(t / (1.0 - t * t)) * (1.0 + t * t) / (1.0 - t * t) ** 2
    return g, -1.0, 1.0


def _gauss_legendre(f, a, b, panels):
    g, lo, hi = _mapped(f, a, b)
    edges = np.linspace(lo, hi, panels + 1)
    results = []
    for order in (20, 10):
        nodes, weights = np.polynomial.legendre.leggauss(order)
        total = 0.0
        for left, right in zip(edges[:-1], edges[1:]):
            half = 0.5 * (right - left)
            t = left + half * (nodes + 1.0)
            vals = np.array([g(ti) for ti in t], dtype=float)
            total += half * np.dot(weights, vals)
        results.append(total)
    return results[0], abs(results[0] - results[1])


def integrate(f, a, b, spec=None, points=None):
    """Integrate ``f`` over ``[a, b]``; either end may be infinite.

    ``points`` are interior breakpoints; the interval is split there and the
    pieces are integrated separately.  Returns ``(value, error_estimate)``.
    Raises AccuracyError (carrying the best value) when the estimate exceeds
    ``max(abs_tol, rel_tol*|value|)``.
    """
    spec = spec or DEFAULT_QUADRATURE
    if a == b:
        return 0.0, 0.0
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0
    cuts = sorted(p for p in (points or ()) if a < p < b)
    bounds = [a, *cuts, b]

    value = 0.0
    error = 0.0
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if spec.scheme == "adaptive":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", _scipy_integrate.IntegrationWarning)
                v, e = _scipy_integrate.quad(
                    f, lo, hi, epsabs=spec.abs_tol / len(bounds),
                    epsrel=spec.rel_tol, limit=int(spec.max_subdivisions))
        else:
            v, e = _gauss_legendre(f, lo, hi, int(spec.max_subdivisions))
        value += v
        error += e
    value *= sign
    if not np.isfinite(value) or error > spec.tolerance(value):
        raise AccuracyError(
            f"quadrature on [{a}, {b}] reached error {error:.3g}, "
            f"requested {spec.tolerance(value):.3g}", value=value, error=error)
    return value, error


# ---------------------------------------------------------------------------
# Gamma


def gamma_fn(x):
    """Euler Gamma function for real ``x`` off the poles 0, -1, -2, ..."""
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"gamma_fn needs a finite argument, got {x}")
    if x <= 0 and x == math.floor(x):
        raise DomainError(f"gamma_fn has a pole at x = {int(x)}")
    return math.gamma(x)


# ---------------------------------------------------------------------------
# modified Bessel functions of the second kind, orders 0 and 1


def _k01_series(x):
    # Temme's series at order 0 (valid for x <= 2); returns K0, K1
    half = 0.5 * x
    ff = -np.log(half) - EULER_GAMMA
    total = ff.copy()
    p = np.full_like(x, 0.5)
    q = np.full_like(x, 0.5)
    c = np.ones_like(x)
    quarter_sq = half * half
    total1 = p.copy()
    for i in range(1, _MAX_ITER):
        ff = (i * ff + p + q) / (i * i)
        c = c * quarter_sq / i
        p = p / i
        q = q / i
        term = c * ff
        total += term
        total1 += c * (p - i * ff)
        if np.all(np.abs(term) < np.abs(total) * _EPS):
            break
    return total, total1 * 2.0 / x


def _k01_cf2_scaled(x):
    # Steed's continued fraction for x >= 2; returns exp(x)*K0, exp(x)*K1
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAX_ITER):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        if np.all(np.abs(dels / s) < _EPS):
            break
    h = a1 * h
    k0 = np.sqrt(np.pi / (2.0 * x)) / s
    k1 = k0 * (x + 0.5 - h) / x
    return k0, k1


def _check_z(z):
    z = np.asarray(z, dtype=float)
    if np.any(~(z > 0)):
        raise DomainError("K-Bessel functions need z > 0")
    return z


def bessel_k01(z, scaled=False):
    """Return ``(K0(z), K1(z))``, multiplied by ``exp(z)`` if ``scaled``.

    Series below z = 2, continued fraction above.  Arrays in, arrays out.
    """
    z = _check_z(z)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    k0 = np.empty_like(z)
    k1 = np.empty_like(z)
    small = z <= _K_SERIES_MAX
    if np.any(small):
        s0, s1 = _k01_series(z[small])
        if scaled:
            factor = np.exp(z[small])
            s0, s1 = s0 * factor, s1 * factor
        k0[small], k1[small] = s0, s1
    large = ~small
    if np.any(large):
        l0, l1 = _k01_cf2_scaled(z[large])
        if not scaled:
            factor = np.exp(-z[large])
            if np.any(factor == 0.0):
                warnings.warn("K-Bessel value underflowed to 0; use scaled=True",
                              UnderflowWarning, stacklevel=2)
            l0, l1 = l0 * factor, l1 * factor
        k0[large], k1[large] = l0, l1
    if scalar:
        return float(k0[0]), float(k1[0])
    return k0, k1


def bessel_k(nu, z):
    """Modified Bessel function K_nu(z) for nu in {0, 1} and z > 0."""
    if nu not in (0, 1):
        raise DomainError(f"bessel_k supports nu in {{0, 1}}, got {nu}")
    return bessel_k01(z)[nu]


def bessel_k_scaled(nu, z):
    """exp(z) * K_nu(z); does not underflow for large z."""
    if nu not in (0, 1):
        raise DomainError(f"bessel_k supports nu in {{0, 1}}, got {nu}")
    return bessel_k01(z, scaled=True)[nu]


# ---------------------------------------------------------------------------
# confluent hypergeometric functions


def _is_nonpositive_integer(v, tol=0.0):
    return v <= tol and abs(v - round(v)) <= tol


def _kummer_series(alpha, beta, z, max_terms):
    # returns (sum, sum of |terms|); the second bounds rounding error
    if z < 0:
        total, scale = _kummer_series(beta - alpha, beta, -z, max_terms)
        factor = math.exp(z)
        return factor * total, factor * scale
    term = 1.0
    total = 1.0
    scale = 1.0
    for k in range(max_terms):
        term *= (alpha + k) * z / ((beta + k) * (k + 1))
        total += term
        scale += abs(term)
        if term == 0.0:
            return total, scale
        ratio = abs((alpha + k + 1) * z / ((beta + k + 1) * (k + 2)))
        if abs(term) <= _EPS * abs(total) and ratio < 1.0:
            return total, scale
    raise AccuracyError(
        f"kummer_m({alpha}, {beta}, {z}) did not converge in {max_terms} terms",
        value=total)


def kummer_m(alpha, beta, z, max_terms=5000):
    """Kummer's function M(alpha, beta; z) = 1F1(alpha; beta; z).

    Negative ``z`` goes through Kummer's transformation
    M(a, b; z) = e^z M(b - a, b; -z) so the summed series has no
    cancellation.
    """
    alpha, beta, z = float(alpha), float(beta), float(z)
    if _is_nonpositive_integer(beta):
        raise DomainError(f"kummer_m has a pole at beta = {beta}")
    return _kummer_series(alpha, beta, z, max_terms)[0]


_U_SPEC = QuadratureSpec(abs_tol=1e-300, rel_tol=1e-13, max_subdivisions=200)


def tricomi_u_integral(alpha, beta, z):
    """Integral representation of U; returns ``(value, error_estimate)``."""
    p = beta - alpha - 1.0

    # [0, 1]: algebraic endpoint weight t^(alpha-1) handled by QUADPACK (QAWS)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _scipy_integrate.IntegrationWarning)
        head, head_err = _scipy_integrate.quad(
            lambda t: math.exp(-z * t) * (1.0 + t) ** p, 0.0, 1.0,
            weight="alg", wvar=(alpha - 1.0, 0.0),
            epsabs=0.0, epsrel=1e-13, limit=200)

    # [1, inf): t = e^s turns the slow power-law decay into something compact
    def tail(s):
        t = math.exp(s)
        return math.exp(-z * t) * t ** alpha * (1.0 + t) ** p

    s_max = math.log((700.0 + 4.0 * abs(beta - 2.0)) / z)
    points = [-math.log(z)] if z < 1.0 else None
    rest, rest_err = integrate(tail, 0.0, max(s_max, 1.0), _U_SPEC, points=points)
    total = head + rest
    return total / gamma_fn(alpha), (head_err + rest_err) / gamma_fn(alpha)


def tricomi_u_connection(alpha, beta, z, with_scale=False):
    """Tricomi U from two Kummer functions (beta must not be an integer).

    U(a,b;z) = G(1-b)/G(a-b+1) M(a,b;z) + G(b-1)/G(a) z^(1-b) M(a-b+1,2-b;z)

    The two terms cancel once z is large.  With ``with_scale`` also returns
    the sum of the magnitudes of everything added, a bound on the rounding
    error in units of machine epsilon.
    """
    alpha, beta, z = float(alpha), float(beta), float(z)
    if abs(beta - round(beta)) < 1e-6:
        raise DomainError("Kummer connection is singular for integer beta")
    if _is_nonpositive_integer(alpha - beta + 1.0):
        first = scale1 = 0.0
    else:
        coef = gamma_fn(1.0 - beta) / gamma_fn(alpha - beta + 1.0)
        m, m_scale = _kummer_series(alpha, beta, z, 5000)
        first, scale1 = coef * m, abs(coef) * m_scale
    coef = gamma_fn(beta - 1.0) / gamma_fn(alpha) * z ** (1.0 - beta)
    m, m_scale = _kummer_series(alpha - beta + 1.0, 2.0 - beta, z, 5000)
    value = first + coef * m
    if with_scale:
        return value, scale1 + abs(coef) * m_scale
    return value


_CONNECTION_MAX_Z = 10.0


def tricomi_u(alpha, beta, z, check=True):
    """Tricomi's confluent hypergeometric function U(alpha, beta; z).

    Evaluated from the integral
    U = 1/Gamma(a) int_0^inf exp(-z t) t^(a-1) (1+t)^(b-a-1) dt,
    which needs alpha > 0 and z > 0 but works for every real beta.  With
    ``check`` the value is cross-checked against the Kummer connection when
    beta is not near an integer and z <= 10.
    """
    alpha, beta, z = float(alpha), float(beta), float(z)
    if not alpha > 0:
        raise DomainError(f"tricomi_u needs alpha > 0, got {alpha}")
    if not z > 0:
        raise DomainError(f"tricomi_u needs z > 0, got {z}")
    if beta == alpha + 1.0:
        return z ** -alpha
    value, _ = tricomi_u_integral(alpha, beta, z)
    if check and abs(beta - round(beta)) > 1e-6 and z <= _CONNECTION_MAX_Z:
        other, scale = tricomi_u_connection(alpha, beta, z, with_scale=True)
        allowed = 1e-8 * abs(value) + 1e3 * _EPS * scale
        if abs(other - value) > allowed:
            raise AccuracyError(
                f"tricomi_u({alpha}, {beta}, {z}): integral {value!r} and "
                f"Kummer connection {other!r} disagree", value=value)
    return value
