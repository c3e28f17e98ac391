"""Special-function kernels: q-series, the non-compact quantum dilogarithm,
its 2Psi2 integral transform, and the cyclic (root-of-unity) dilogarithm.

The non-compact quantum dilogarithm used here is

    phi(z) = exp( (1/4) * int_{R+i0} e^{-2 i z x} / (sinh(x b) sinh(x/b) x) dx ),

with poles at z = +i(eta + m b + n/b) and zeros at z = -i(eta + m b + n/b),
m, n >= 0, where eta = (b + 1/b)/2.  Two independent evaluation routes are
provided (shifted-contour quadrature and, for Im b^2 > 0, a convergent
infinite product) and are cross-validated in the test suite; the product
form was derived by summing residues of the defining integral and is not
taken from any closed-form reference.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    AccuracyError,
    DegeneracyError,
    DomainError,
    PoleProximityError,
    SingularityError,
)

_TWO_PI = 2.0 * math.pi


@lru_cache(maxsize=64)
def gauss_legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


# ---------------------------------------------------------------------------
# q-series basics
# ---------------------------------------------------------------------------

def qpochhammer(x: complex, qsq: complex, n: int) -> complex:
    """Finite q-shifted factorial prod_{j=0}^{n-1} (1 - qsq^j x)."""
    if n < 0:
        raise DomainError("qpochhammer order must be nonnegative")
    out = 1.0 + 0.0j
    fac = complex(x)
    for _ in range(n):
        out *= 1.0 - fac
        fac *= qsq
    return out


def qpochhammer_inf(x: complex, qsq: complex, tol: float = 1e-300, max_terms: int = 100000) -> complex:
    """Infinite product (x; qsq)_inf, requires |qsq| < 1."""
    if abs(qsq) >= 1.0:
        raise DomainError("qpochhammer_inf requires |qsq| < 1")
    out = 1.0 + 0.0j
    fac = complex(x)
    for _ in range(max_terms):
        out *= 1.0 - fac
        fac *= qsq
        if abs(fac) < tol:
            break
    return out


def qbinomial(n: int, k: int, qsq: complex) -> complex:
    """Gaussian binomial coefficient in base qsq; zero when k is out of range."""
    if k < 0 or k > n:
        return 0.0 + 0.0j
    # build as a product of ratios to avoid cancellation of large factors
    out = 1.0 + 0.0j
    for j in range(1, k + 1):
        out *= (1.0 - qsq ** (n - k + j)) / (1.0 - qsq ** j)
    return out


def qgauss_2phi1(a: complex, bb: complex, c: complex, qsq: complex, z: complex,
                 max_terms: int = 10000, tol: float = 1e-18) -> complex:
    """q-deformed Gauss hypergeometric series
    sum_n (a;qsq)_n (bb;qsq)_n / ((qsq;qsq)_n (c;qsq)_n) z^n.

    Terminating when a = qsq^{-m} (the only case the Fock R-matrix needs);
    otherwise requires |z| < 1 and |qsq| < 1.
    """
    m = _terminating_order(a, qsq, max_terms)
    if m is None and (abs(z) >= 1.0 or abs(qsq) >= 1.0):
        raise DomainError("nonterminating 2phi1 requires |z| < 1 and |qsq| < 1")
    total = 1.0 + 0.0j
    term = 1.0 + 0.0j
    n = 0
    while True:
        # ratio of term n+1 to term n
        num = (1.0 - a * qsq ** n) * (1.0 - bb * qsq ** n)
        den = (1.0 - qsq ** (n + 1)) * (1.0 - c * qsq ** n)
        if den == 0:
            raise SingularityError("2phi1 denominator parameter hit a pole at term %d" % (n + 1))
        term *= num / den * z
        total += term
        n += 1
        if m is not None and n >= m:
            break
        if m is None and abs(term) < tol * (1.0 + abs(total)):
            break
        if n >= max_terms:
            raise AccuracyError("2phi1 did not converge in %d terms" % max_terms)
    return total


def _terminating_order(a: complex, qsq: complex, max_m: int) -> int | None:
    """Smallest m >= 0 with a ~ qsq^{-m}, or None if the series does not terminate."""
    if abs(a - 1.0) < 1e-12:
        return 0
    fac = complex(a)
    for m in range(1, min(max_m, 512)):
        fac *= qsq
        if abs(fac - 1.0) < 1e-12:
            return m
    return None


# ---------------------------------------------------------------------------
# modular parameter
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModularParam:
    """Modular parameter b with derived quantities q, q~ and eta."""

    b: complex

    def __post_init__(self):
        if abs(self.b.real) < 1e-14:
            raise DomainError("modular parameter must have Re(b) != 0")

    @property
    def q(self) -> complex:
        return cmath.exp(1j * math.pi * self.b * self.b)

    @property
    def q_tilde(self) -> complex:
        return cmath.exp(-1j * math.pi / (self.b * self.b))

    @property
    def eta(self) -> complex:
        return (self.b + 1.0 / self.b) / 2.0

    @property
    def im_b_sq(self) -> float:
        return (self.b * self.b).imag

    def require_series_domain(self):
        if self.im_b_sq <= 0:
            raise DomainError("series evaluation requires Im(b^2) > 0")


# ---------------------------------------------------------------------------
# quantum dilogarithm
# ---------------------------------------------------------------------------

def _strip_halfwidth(mp: ModularParam) -> float:
    """Distance from the real axis to the nearest pole/zero of phi."""
    return abs(mp.eta.real)


def quantum_dilog(z: complex, mp: ModularParam, method: str = "auto") -> complex:
    """Evaluate phi(z) by the requested method.

    method:
      "quadrature"     shifted straight-contour integral of the log
      "product-series" infinite-product form (requires Im b^2 > 0)
      "auto"           product when available, else quadrature
    """
    if method == "auto":
        method = "product-series" if mp.im_b_sq > 0 else "quadrature"
    if method == "product-series":
        mp.require_series_domain()
        return complex(dilog_product(np.asarray(z, dtype=complex), mp))
    if method == "quadrature":
        return _dilog_quadrature(complex(z), mp)
    raise DomainError("unknown quantum_dilog method %r" % method)


def dilog_product(z: np.ndarray, mp: ModularParam, tol: float = 1e-18,
                  max_terms: int = 20000) -> np.ndarray:
    """Vectorized product form of phi, valid for Im b^2 > 0.

    phi(z) = prod_{m>=0} (1 + q^{2m+1} e^{2 pi z b}) / (1 + q~^{2m+1} e^{2 pi z / b}).
    """
    mp.require_series_domain()
    z = np.asarray(z, dtype=complex)
    qsq = mp.q * mp.q
    qtsq = mp.q_tilde * mp.q_tilde
    eb = np.exp(_TWO_PI * z * mp.b)
    ei = np.exp(_TWO_PI * z / mp.b)
    log_phi = np.zeros_like(z)
    fac_n = complex(mp.q)
    fac_d = complex(mp.q_tilde)
    scale_n = float(np.max(np.abs(eb))) if eb.size else 0.0
    scale_d = float(np.max(np.abs(ei))) if ei.size else 0.0
    for _ in range(max_terms):
        done = True
        if abs(fac_n) * scale_n > tol:
            log_phi += np.log1p(fac_n * eb)
            fac_n *= qsq
            done = False
        if abs(fac_d) * scale_d > tol:
            log_phi -= np.log1p(fac_d * ei)
            fac_d *= qtsq
            done = False
        if done:
            break
    return np.exp(log_phi)


def _dilog_quadrature(z: complex, mp: ModularParam, tol: float = 1e-12) -> complex:
    """phi(z) by Gauss-Legendre panels on the contour R + i*delta.

    The contour is shifted above the third-order pole at x = 0 by a quarter
    of the width of the pole-free strip; panel counts double until two
    successive refinements agree to tol.
    """
    b = mp.b
    strip = math.pi * min(b.real, (1.0 / b).real)
    if strip <= 0:
        raise DomainError("quadrature needs Re(b) > 0 and Re(1/b) > 0")
    half = _strip_halfwidth(mp)
    dist = half - abs(z.imag)
    if dist <= 0.05 * half:
        raise PoleProximityError(
            "z too close to the pole/zero lines of phi", estimate=dist)
    delta = strip / 4.0
    rate = 2.0 * (mp.eta.real - abs(z.imag))
    span = max(50.0 / max(rate, 0.2), 10.0)

    def integral(n_per_panel: int) -> complex:
        edges = [0.0]
        w = delta
        while edges[-1] < span:
            edges.append(min(edges[-1] + w, span))
            w *= 1.7
        nodes, weights = gauss_legendre(n_per_panel)
        total = 0.0 + 0.0j
        for sign in (1.0, -1.0):
            for lo, hi in zip(edges[:-1], edges[1:]):
                mid, rad = 0.5 * (lo + hi), 0.5 * (hi - lo)
                t = sign * (mid + rad * nodes)
                x = t + 1j * delta
                f = np.exp(-2j * z * x) / (np.sinh(x * b) * np.sinh(x / b) * x)
                total += rad * np.sum(weights * f)
        return total

    prev = integral(24)
    for n in (48, 96, 192):
        cur = integral(n)
        if abs(cur - prev) < tol * (1.0 + abs(cur)):
            return cmath.exp(0.25 * cur)
        prev = cur
    raise AccuracyError("phi quadrature did not stabilize", achieved=abs(cur - prev))


# ---------------------------------------------------------------------------
# the 2Psi2 integral
# ---------------------------------------------------------------------------

def psi22(c1: complex, c2: complex, c3: complex, c4: complex, c0: complex,
          mp: ModularParam, method: str = "auto", tol: float = 1e-9) -> complex:
    """The 2Psi2 transform

      int_R dz e^{2 pi i z (-c0 - i eta)}
            phi(z + (c1+i eta)/2) phi(z + (c2+i eta)/2)
          / (phi(z + (c3-i eta)/2) phi(z + (c4-i eta)/2)).

    Symmetric under c1 <-> c2 and c3 <-> c4.  method is "quadrature",
    "residue-series" (Im b^2 > 0 and geometric ratios < 1 required) or "auto".
    """
    c = (complex(c1), complex(c2), complex(c3), complex(c4))
    c0 = complex(c0)
    if method == "auto":
        method = "quadrature"
    if method == "quadrature":
        return complex(psi22_quadrature_batch(
            np.array([c[0]]), np.array([c[1]]), np.array([c[2]]), np.array([c[3]]),
            np.array([c0]), mp, tol=tol)[0])
    if method == "residue-series":
        try:
            return _psi22_residue_series(c, c0, mp)
        except DegeneracyError:
            # confluent (double-pole) configuration, e.g. c1 = c2: the value
            # is symmetric in c1 <-> c2 and analytic, so a symmetric split is
            # even in delta; Richardson over delta, delta/2 leaves O(delta^4)
            delta = 1e-3
            vals = []
            for d in (delta, delta / 2):
                vals.append(_psi22_residue_series(
                    (c[0] + d, c[1] - d, c[2], c[3]), c0, mp))
            return (4.0 * vals[1] - vals[0]) / 3.0
    raise DomainError("unknown psi22 method %r" % method)


def psi22_quadrature_batch(c1, c2, c3, c4, c0, mp: ModularParam,
                           tol: float = 1e-9, max_nodes: int = 4096) -> np.ndarray:
    """Quadrature evaluation of 2Psi2 for arrays of parameters.

    All parameter arrays broadcast together; the z-contour is the real axis.
    The integration window grows and the node count doubles until the result
    stabilizes, with an explicit check that the integrand has decayed in the
    tails.
    """
    c1, c2, c3, c4, c0 = np.broadcast_arrays(
        *(np.asarray(a, dtype=complex) for a in (c1, c2, c3, c4, c0)))
    er = mp.eta.real
    above = min(float(np.min(-c1.imag)) / 2 + er / 2,
                float(np.min(-c2.imag)) / 2 + er / 2)
    below = min(float(np.min(c3.imag)) / 2 + er / 2,
                float(np.min(c4.imag)) / 2 + er / 2)
    if above <= 1e-3 or below <= 1e-3:
        raise PoleProximityError(
            "2Psi2 poles pinch the real contour", estimate=min(above, below))
    eta = mp.eta
    w = -c0 - 1j * eta
    shifts = ((c1 + 1j * eta) / 2, (c2 + 1j * eta) / 2,
              (c3 - 1j * eta) / 2, (c4 - 1j * eta) / 2)

    def integrand(z):
        # z: 1-D array of real nodes; result shape = z.shape + c.shape
        zz = z.reshape(z.shape + (1,) * c1.ndim)
        val = np.exp(2j * np.pi * zz * w)
        val *= dilog_product(zz + shifts[0], mp, tol=3e-15)
        val *= dilog_product(zz + shifts[1], mp, tol=3e-15)
        val /= dilog_product(zz + shifts[2], mp, tol=3e-15)
        val /= dilog_product(zz + shifts[3], mp, tol=3e-15)
        return val

    # the integrand decays like exp(-2 pi eta_re |z|) for real parameters;
    # start the window where that bound alone is ~1e-12
    span = max(28.0 / (2 * math.pi * max(mp.eta.real, 0.25)), 1.0)
    n = 256
    prev = None
    for _ in range(12):
        nodes, weights = gauss_legendre(n)
        z = span * nodes
        f = integrand(z)
        cur = span * np.tensordot(weights, f, axes=(0, 0))
        scale = np.max(np.abs(cur)) + 1e-300
        edge = max(np.max(np.abs(integrand(np.array([-span])))),
                   np.max(np.abs(integrand(np.array([span])))))
        if edge * span > 1e-10 * scale:
            span *= 1.5
            prev = None
            continue
        if prev is not None and np.max(np.abs(cur - prev)) < tol * scale:
            return cur
        prev = cur
        n *= 2
        if n > max_nodes:
            break
    raise AccuracyError("2Psi2 quadrature did not stabilize",
                        achieved=float(np.max(np.abs(cur - prev))) if prev is not None else None)


def psi22_residue_ratios(c, c0, mp: ModularParam):
    """Asymptotic geometric ratios of the residue series in the two lattice
    directions; both must have modulus < 1 for convergence.

    In the q-direction each step multiplies by exp(-2 pi b w); in the
    q~-direction the phi factors contribute exp(2 pi (v3+v4-u1-u2)/b) on top
    of exp(-2 pi w / b), with v3+v4-u1-u2 = (c3+c4-c1-c2)/2 - 2 i eta.
    """
    w = -c0 - 1j * mp.eta
    rm = cmath.exp(-_TWO_PI * mp.b * w)
    delta = (c[2] + c[3] - c[0] - c[1]) / 2.0
    rn = cmath.exp(_TWO_PI * (-w + delta - 2j * mp.eta) / mp.b)
    return rm, rn


def _psi22_residue_series(c, c0, mp: ModularParam, tol: float = 1e-16,
                          max_m: int = 600, max_n: int = 600) -> complex:
    """Residue series for 2Psi2, contour closed in the upper half plane.

    The integrand's upper poles are those of the two numerator phi factors,
    sitting at z = -u_j + i(eta + m b + n/b).  Each residue factorizes into
    an m-recursion (powers of q) and an n-recursion (powers of q~), so the
    double series is accumulated with O(1) multiplicative updates; the large
    q~^{-2n} factors cancel exactly between the phi values and the residue
    of phi and are never formed explicitly.
    """
    mp.require_series_domain()
    rm, rn = psi22_residue_ratios(c, c0, mp)
    if abs(rm) >= 0.999 or abs(rn) >= 0.999:
        raise DomainError(
            "2Psi2 residue series diverges at these parameters "
            "(ratios %.3f, %.3f); use quadrature or analytic continuation"
            % (abs(rm), abs(rn)))
    eta = mp.eta
    qsq = mp.q * mp.q
    qtsq = mp.q_tilde * mp.q_tilde
    u = [(c[0] + 1j * eta) / 2, (c[1] + 1j * eta) / 2]
    v = [(c[2] - 1j * eta) / 2, (c[3] - 1j * eta) / 2]
    w = -c0 - 1j * eta
    res00 = -mp.b * qpochhammer_inf(qsq, qsq) / (_TWO_PI * qpochhammer_inf(qtsq, qtsq))
    xm = cmath.exp(-_TWO_PI * mp.b * w)   # m-direction prefactor ratio
    xn = cmath.exp(-_TWO_PI * w / mp.b)   # n-direction prefactor ratio

    total = 0.0 + 0.0j
    for j, (uj, uo) in enumerate(((u[0], u[1]), (u[1], u[0]))):
        if abs((u[0] - u[1]).real) < 1e-12 and abs((u[0] - u[1]).imag) < 1e-12 and j == 1:
            raise DegeneracyError("coincident numerator shifts give a double pole")
        # base point m = n = 0
        z0 = 1j * eta - uj
        _check_lattice_distance(z0 + uo, mp)
        base = (2j * np.pi * cmath.exp(2j * np.pi * z0 * w) * res00
                * complex(dilog_product(np.asarray(z0 + uo), mp))
                / complex(dilog_product(np.asarray(z0 + v[0]), mp))
                / complex(dilog_product(np.asarray(z0 + v[1]), mp)))
        eb = {s: cmath.exp(_TWO_PI * (s - uj) * mp.b) for s in (uo, v[0], v[1])}
        ei = {s: cmath.exp(_TWO_PI * (s - uj) / mp.b) for s in (uo, v[0], v[1])}
        term_m = base
        small_m = 0
        for m in range(max_m):
            if m > 0:
                qq = qsq ** m
                fac = xm / (1.0 - qq)
                fac *= (1.0 - qq * eb[v[0]]) * (1.0 - qq * eb[v[1]]) / (1.0 - qq * eb[uo])
                term_m *= fac
            # inner n-series
            term = term_m
            total += term
            tmax = abs(term)
            small_n = 0
            for n in range(1, max_n):
                y = qtsq ** n  # q~^{2n}, tiny for large n; ratios stay O(1)
                fac = xn * ((y - ei[v[0]]) * (y - ei[v[1]])) / ((y - ei[uo]) * (y - 1.0))
                term *= fac
                total += term
                tmax = max(tmax, abs(term))
                if abs(term) < tol * (1.0 + abs(total)):
                    small_n += 1
                    if small_n >= 3:
                        break
                else:
                    small_n = 0
            else:
                raise AccuracyError("2Psi2 residue n-series did not converge")
            if tmax < tol * (1.0 + abs(total)):
                small_m += 1
                if small_m >= 3:
                    break
            else:
                small_m = 0
        else:
            raise AccuracyError("2Psi2 residue m-series did not converge")
    return complex(total)


def _check_lattice_distance(point: complex, mp: ModularParam, min_dist: float = 1e-8):
    """Raise if point is numerically on the pole/zero lattice of phi."""
    # solve point = +-i(eta + m b + n/b) for real (m, n) and check the
    # distance to the nearest nonnegative integer pair
    for sign in (1.0, -1.0):
        rhs = point / (1j * sign) - mp.eta
        # decompose rhs = m*b + n*(1/b) over the reals
        br, bi = mp.b.real, mp.b.imag
        ir, ii = (1 / mp.b).real, (1 / mp.b).imag
        det = br * ii - bi * ir
        if abs(det) < 1e-14:
            continue
        m = (rhs.real * ii - rhs.imag * ir) / det
        n = (rhs.imag * br - rhs.real * bi) / det
        mr, nr = round(m), round(n)
        if mr >= 0 and nr >= 0:
            dist = abs((m - mr) * mp.b + (n - nr) / mp.b)
            if dist < min_dist:
                raise DegeneracyError(
                    "2Psi2 residue point collides with the phi lattice",
                    estimate=dist)


# ---------------------------------------------------------------------------
# cyclic (root of unity) dilogarithm on the Fermat curve
# ---------------------------------------------------------------------------

def root_of_unity_q(N: int) -> complex:
    """q = -exp(i pi / N), stored as an exact phase."""
    if N < 2:
        raise DomainError("need N >= 2")
    return -cmath.exp(1j * math.pi / N)


def q_power(N: int, exponent: int) -> complex:
    """q^exponent for q = -exp(i pi/N), computed from the reduced phase.

    q = exp(i pi (N+1)/N), so q^e = exp(i pi ((N+1) e mod 2N) / N); the
    reduction is done in integers so no floating-point power accumulates.
    """
    e = ((N + 1) * exponent) % (2 * N)
    return cmath.exp(1j * math.pi * e / N)


@dataclass(frozen=True)
class FermatPoint:
    """Point (x, y) with x^N + y^N = 1."""

    x: complex
    y: complex
    N: int

    def __post_init__(self):
        if self.N < 2:
            raise DomainError("need N >= 2")
        if self.curve_residual() > 1e-10:
            raise DomainError(
                "point is off the Fermat curve (residual %.2e)" % self.curve_residual())

    def curve_residual(self) -> float:
        return abs(self.x ** self.N + self.y ** self.N - 1.0)


def fermat_phi_table(p: FermatPoint) -> np.ndarray:
    """All N values of the cyclic dilogarithm phi_p(0..N-1).

    phi_p(0) = 1 and phi_p(n-1)/phi_p(n) = (1 - x q^{2n})/y.
    """
    if abs(p.y) < 1e-300:
        raise SingularityError("cyclic dilogarithm undefined at y = 0")
    N = p.N
    out = np.empty(N, dtype=complex)
    out[0] = 1.0
    for n in range(1, N):
        denom = 1.0 - p.x * q_power(N, 2 * n)
        if abs(denom) < 1e-14:
            raise SingularityError("cyclic dilogarithm hit 1 - x q^{2n} = 0 at n=%d" % n)
        out[n] = out[n - 1] * p.y / denom
    return out


def fermat_phi(p: FermatPoint, n: int, q: complex | None = None) -> complex:
    """phi_p(n) with the index reduced mod N."""
    if q is not None and abs(q - root_of_unity_q(p.N)) > 1e-12:
        raise DomainError("q must equal -exp(i pi/N) for this point")
    return complex(fermat_phi_table(p)[n % p.N])


# ---------------------------------------------------------------------------
# spherical triangles and the Fermat points of the cyclic solution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SphericalTriangle:
    """Angles theta_j and sides a_j of a spherical triangle plus the derived
    combinations 2 beta_1 = a2+a3-a1 (cyclic) and beta_0 = pi - sum(beta)."""

    theta1: float
    theta2: float
    theta3: float
    a1: float
    a2: float
    a3: float

    @property
    def beta1(self) -> float:
        return 0.5 * (self.a2 + self.a3 - self.a1)

    @property
    def beta2(self) -> float:
        return 0.5 * (self.a1 + self.a3 - self.a2)

    @property
    def beta3(self) -> float:
        return 0.5 * (self.a1 + self.a2 - self.a3)

    @property
    def beta0(self) -> float:
        return math.pi - self.beta1 - self.beta2 - self.beta3


def spherical_sides_from_angles(theta1: float, theta2: float, theta3: float) -> SphericalTriangle:
    """Sides from angles via the dual spherical law of cosines.

    cos a_i = (cos theta_i + cos theta_j cos theta_k) / (sin theta_j sin theta_k).
    """
    th = (theta1, theta2, theta3)
    for j, t in enumerate(th):
        if not (0.0 < t < math.pi):
            raise DomainError("angle theta%d=%r outside (0, pi)" % (j + 1, t))
    s = sum(th)
    if s <= math.pi:
        raise DomainError("angle sum must exceed pi (got %.6f)" % s)
    if s >= 3 * math.pi:
        raise DomainError("angle sum must be below 3*pi")
    names = ("theta2+theta3-theta1", "theta1+theta3-theta2", "theta1+theta2-theta3")
    combos = (th[1] + th[2] - th[0], th[0] + th[2] - th[1], th[0] + th[1] - th[2])
    for name, val in zip(names, combos):
        if val >= math.pi:
            raise DomainError("violated inequality %s < pi (got %.6f)" % (name, val))
    sides = []
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        ca = (math.cos(th[i]) + math.cos(th[j]) * math.cos(th[k])) / (
            math.sin(th[j]) * math.sin(th[k]))
        if not (-1.0 < ca < 1.0):
            raise DomainError("degenerate triangle: cos a%d = %.6f" % (i + 1, ca))
        sides.append(math.acos(ca))
    return SphericalTriangle(theta1, theta2, theta3, *sides)


def spherical_angles_from_sides(a1: float, a2: float, a3: float) -> tuple[float, float, float]:
    """Angles from sides (independent oracle for the conversion above)."""
    aa = (a1, a2, a3)
    out = []
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        ct = (math.cos(aa[i]) - math.cos(aa[j]) * math.cos(aa[k])) / (
            math.sin(aa[j]) * math.sin(aa[k]))
        out.append(math.acos(min(1.0, max(-1.0, ct))))
    return tuple(out)


def _principal_root(value: float, N: int) -> float:
    if value <= 0:
        raise DomainError("principal N-th root needs a positive radicand")
    return value ** (1.0 / N)


def fermat_points_from_triangle(tri: SphericalTriangle, N: int):
    """The four Fermat-curve points entering the cyclic R-matrix.

    Moduli are principal N-th roots of sine ratios; phases are exact
    exp(i * angle / N) factors.
    """
    b0, b1, b2, b3 = tri.beta0, tri.beta1, tri.beta2, tri.beta3
    s0, s1, s2, s3 = (math.sin(x) for x in (b0, b1, b2, b3))
    sa2 = math.sin(tri.a2)
    for name, s in (("beta0", s0), ("beta1", s1), ("beta2", s2), ("beta3", s3), ("a2", sa2)):
        if s <= 0:
            raise DomainError("sin(%s) must be positive" % name)
    e = lambda ang: cmath.exp(1j * ang / N)
    p1 = FermatPoint(e(-tri.a2) * _principal_root(s2 / s0, N),
                     e(b2) * _principal_root(sa2 / s0, N), N)
    p2 = FermatPoint(e(-tri.a2) * _principal_root(s0 / s2, N),
                     e(b0) * _principal_root(sa2 / s2, N), N)
    p3 = FermatPoint(e(-(tri.a2 + math.pi)) * _principal_root(s3 / s1, N),
                     e(-b3) * _principal_root(sa2 / s1, N), N)
    p4 = FermatPoint(e(-(tri.a2 + math.pi)) * _principal_root(s1 / s3, N),
                     e(-b1) * _principal_root(sa2 / s3, N), N)
    return p1, p2, p3, p4
