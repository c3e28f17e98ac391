import cmath
import math

import numpy as np
import pytest

from qlattice.errors import DomainError, PoleProximityError
from qlattice import specfun as sf

B_TEST = sf.ModularParam(0.8 * cmath.exp(1j * math.pi / 40))


# ---------------------------------------------------------------------------
# q-series
# ---------------------------------------------------------------------------

def test_qpochhammer_empty_product():
    assert sf.qpochhammer(0.3 + 0.1j, 0.5, 0) == 1.0


def test_qpochhammer_at_one_vanishes():
    assert sf.qpochhammer(1.0, 0.37 + 0.1j, 3) == 0.0


def test_qpochhammer_direct_two_factor():
    q = 0.3
    qsq = q * q
    # oracle: literal two-factor product
    expected = (1 - qsq) * (1 - qsq * qsq)
    assert sf.qpochhammer(qsq, qsq, 2) == pytest.approx(expected, abs=1e-15)


def test_qpochhammer_splitting_identity():
    rng = np.random.default_rng(7)
    for _ in range(50):
        x = complex(rng.normal(), rng.normal())
        qsq = complex(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6))
        m, n = rng.integers(0, 9, size=2)
        lhs = sf.qpochhammer(x, qsq, m + n)
        rhs = sf.qpochhammer(x, qsq, m) * sf.qpochhammer(x * qsq ** m, qsq, n)
        assert abs(lhs - rhs) < 1e-12 * (1 + abs(lhs))


def test_qbinomial_edges_and_value():
    qsq = 0.09
    assert sf.qbinomial(5, 0, qsq) == 1.0
    assert sf.qbinomial(5, 5, qsq) == 1.0
    assert sf.qbinomial(3, 7, qsq) == 0.0
    # (2 choose 1)_{q^2} = 1 + q^2 at q = 0.3
    assert sf.qbinomial(2, 1, qsq) == pytest.approx(1.09, abs=1e-14)


def test_qbinomial_symmetry():
    qsq = 0.2 + 0.1j
    for n in range(8):
        for k in range(n + 1):
            assert sf.qbinomial(n, k, qsq) == pytest.approx(sf.qbinomial(n, n - k, qsq), abs=1e-12)


def test_2phi1_trivial_cases():
    qsq = 0.25
    assert sf.qgauss_2phi1(0.5, 0.7, 0.9, qsq, 0.0) == 1.0
    # a = 1 kills every term past n = 0
    assert sf.qgauss_2phi1(1.0, 0.7, 0.9, qsq, 0.3) == pytest.approx(1.0, abs=1e-14)


def test_2phi1_divergent_regime_rejected():
    with pytest.raises(DomainError):
        sf.qgauss_2phi1(0.5, 0.7, 0.9, 0.25, 1.5)


def test_psi22_contour_pinch_rejected():
    from qlattice.errors import PoleProximityError
    with pytest.raises(PoleProximityError):
        sf.psi22(2.5j, 0.0, 0.0, 0.0, 0.0, B_TEST, method="quadrature")


def test_dilog_product_requires_series_domain():
    with pytest.raises(DomainError):
        sf.quantum_dilog(0.1, sf.ModularParam(0.9), method="product-series")


def test_2phi1_terminating_two_terms():
    q = 0.3
    qsq = q * q
    z = 0.37 - 0.21j
    # a = q^-2 terminates at n = 1; direct evaluation gives 1 - q^-2 z
    got = sf.qgauss_2phi1(1 / qsq, qsq, qsq, qsq, z)
    assert got == pytest.approx(1 - z / qsq, abs=1e-13)


# ---------------------------------------------------------------------------
# modular parameter
# ---------------------------------------------------------------------------

def test_modular_param_rejects_imaginary_b():
    with pytest.raises(DomainError):
        sf.ModularParam(1j * 0.7)


def test_modular_param_eta_consistency():
    mp = B_TEST
    assert abs(mp.eta - (mp.b + 1 / mp.b) / 2) < 1e-14
    assert abs(mp.q - cmath.exp(1j * math.pi * mp.b ** 2)) < 1e-14
    assert abs(mp.q_tilde - cmath.exp(-1j * math.pi / mp.b ** 2)) < 1e-14


# ---------------------------------------------------------------------------
# quantum dilogarithm
# ---------------------------------------------------------------------------

def test_dilog_b_inversion_symmetry():
    # the defining integrand is symmetric under b <-> 1/b
    mp1 = sf.ModularParam(0.9)
    mp2 = sf.ModularParam(1 / 0.9)
    for z in (0.0, 0.17, -0.2 + 0.1j):
        v1 = sf.quantum_dilog(z, mp1, method="quadrature")
        v2 = sf.quantum_dilog(z, mp2, method="quadrature")
        assert abs(v1 - v2) < 1e-10


def test_dilog_product_vs_quadrature():
    rng = np.random.default_rng(11)
    for _ in range(20):
        z = complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.3, 0.3))
        vq = sf.quantum_dilog(z, B_TEST, method="quadrature")
        vp = sf.quantum_dilog(z, B_TEST, method="product-series")
        assert abs(vq - vp) / abs(vq) < 1e-8


def test_dilog_conjugation_unitarity():
    # real b: the integrand's reality structure forces
    # conj(phi(conj(z))) * phi(z) = 1, hence |phi| = 1 on the real axis
    mp = sf.ModularParam(0.9)
    for z in (0.05, 0.31, -0.4, 0.2 + 0.15j):
        v = sf.quantum_dilog(z, mp, method="quadrature")
        w = sf.quantum_dilog(complex(z).conjugate(), mp, method="quadrature")
        assert abs(w.conjugate() * v - 1.0) < 1e-10
    assert abs(abs(sf.quantum_dilog(0.37, mp, method="quadrature")) - 1.0) < 1e-10


def test_dilog_pole_proximity_error():
    with pytest.raises(PoleProximityError):
        sf.quantum_dilog(1j * B_TEST.eta.real, B_TEST, method="quadrature")


def test_dilog_inversion_relation():
    # phi(z) phi(-z) = e^{i pi z^2} phi(0)^2 ; derived self-consistency of
    # the product form, pinned numerically at z = 0
    mp = B_TEST
    c = sf.quantum_dilog(0.0, mp) ** 2
    rng = np.random.default_rng(3)
    for _ in range(10):
        z = complex(rng.uniform(-0.6, 0.6), rng.uniform(-0.2, 0.2))
        lhs = sf.quantum_dilog(z, mp) * sf.quantum_dilog(-z, mp)
        rhs = cmath.exp(1j * math.pi * z * z) * c
        assert abs(lhs - rhs) / abs(rhs) < 1e-10


# ---------------------------------------------------------------------------
# 2Psi2
# ---------------------------------------------------------------------------

def _random_admissible_c(rng):
    c = rng.uniform(-0.35, 0.3, size=4)
    c0 = rng.uniform(-0.45, -0.1)
    # keep the residue series convergent: both geometric ratios < 1
    rm, rn = sf.psi22_residue_ratios(tuple(map(complex, c)), complex(c0), B_TEST)
    if abs(rm) > 0.85 or abs(rn) > 0.85:
        return None
    return c, c0


def test_psi22_swap_symmetries():
    rng = np.random.default_rng(5)
    c = rng.uniform(-0.3, 0.3, size=4)
    c0 = -0.2
    v = sf.psi22(c[0], c[1], c[2], c[3], c0, B_TEST, method="quadrature")
    v12 = sf.psi22(c[1], c[0], c[2], c[3], c0, B_TEST, method="quadrature")
    v34 = sf.psi22(c[0], c[1], c[3], c[2], c0, B_TEST, method="quadrature")
    assert abs(v - v12) < 1e-12 * (1 + abs(v))
    assert abs(v - v34) < 1e-12 * (1 + abs(v))


def test_psi22_quadrature_vs_residue_series():
    rng = np.random.default_rng(23)
    checked = 0
    while checked < 20:
        pick = _random_admissible_c(rng)
        if pick is None:
            continue
        c, c0 = pick
        vq = sf.psi22(*c, c0, B_TEST, method="quadrature")
        vr = sf.psi22(*c, c0, B_TEST, method="residue-series")
        assert abs(vq - vr) / abs(vq) < 1e-6
        checked += 1


def test_psi22_divergent_residue_series_raises():
    with pytest.raises(DomainError):
        sf.psi22(0.1, 0.2, -0.1, 0.0, 1.5, B_TEST, method="residue-series")


def test_psi22_confluent_double_pole_case():
    # c1 = c2 makes the two numerator pole lattices coincide; the residue
    # route must still agree with quadrature through the symmetric split
    for c1, c3, c4, c0 in [(0.0, 0.0, 0.0, 0.0), (0.12, -0.2, 0.05, -0.3)]:
        vq = sf.psi22(c1, c1, c3, c4, c0, B_TEST, method="quadrature")
        vr = sf.psi22(c1, c1, c3, c4, c0, B_TEST, method="residue-series")
        assert abs(vq - vr) / abs(vq) < 1e-6


def test_fermat_phi_periodicity_triangle_points():
    rng = np.random.default_rng(21)
    for N in (2, 3, 5):
        tri = sample_triangle(rng)
        for p in sf.fermat_points_from_triangle(tri, N):
            for n in range(N):
                assert abs(sf.fermat_phi(p, n + N) - sf.fermat_phi(p, n)) < 1e-10


# ---------------------------------------------------------------------------
# cyclic dilogarithm
# ---------------------------------------------------------------------------

def _sample_point(N, rng):
    # random point on the curve with y from the principal branch
    x = complex(rng.uniform(0.2, 0.8), rng.uniform(-0.3, 0.3))
    y = (1 - x ** N) ** (1.0 / N)
    return sf.FermatPoint(x, y, N)


def test_fermat_phi_base_and_first_step():
    rng = np.random.default_rng(2)
    p = _sample_point(3, rng)
    q = sf.root_of_unity_q(3)
    assert sf.fermat_phi(p, 0) == 1.0
    expected = p.y / (1 - p.x * q ** 2)
    assert sf.fermat_phi(p, 1) == pytest.approx(expected, abs=1e-14)


def test_fermat_phi_periodicity_and_cyclotomic_product():
    rng = np.random.default_rng(4)
    for N in (3, 5):
        p = _sample_point(N, rng)
        q = sf.root_of_unity_q(N)
        prod = 1.0 + 0j
        for n in range(1, N + 1):
            prod *= 1 - p.x * q ** (2 * n)
        # prod_{n=1}^{N} (1 - x q^{2n}) = 1 - x^N, which drives periodicity
        assert abs(prod - (1 - p.x ** N)) < 1e-12
        for n in range(N):
            assert abs(sf.fermat_phi(p, n + N) - sf.fermat_phi(p, n)) < 1e-12


def test_fermat_point_rejects_off_curve():
    with pytest.raises(DomainError):
        sf.FermatPoint(0.5, 0.5, 3)


def test_q_power_exactness():
    for N in (2, 3, 4, 5):
        q = sf.root_of_unity_q(N)
        for e in range(-6, 12):
            assert abs(sf.q_power(N, e) - q ** e) < 1e-12


# ---------------------------------------------------------------------------
# spherical triangles and Fermat points
# ---------------------------------------------------------------------------

def test_octant_triangle():
    tri = sf.spherical_sides_from_angles(math.pi / 2, math.pi / 2, math.pi / 2)
    for a in (tri.a1, tri.a2, tri.a3):
        assert a == pytest.approx(math.pi / 2, abs=1e-14)


def test_degenerate_angle_sum_rejected():
    with pytest.raises(DomainError):
        sf.spherical_sides_from_angles(math.pi / 3, math.pi / 3, math.pi / 3)


def sample_triangle(rng):
    while True:
        th = rng.uniform(0.3, math.pi - 0.3, size=3)
        try:
            return sf.spherical_sides_from_angles(*th)
        except DomainError:
            continue


def test_sides_angles_roundtrip():
    rng = np.random.default_rng(9)
    for _ in range(100):
        tri = sample_triangle(rng)
        th = sf.spherical_angles_from_sides(tri.a1, tri.a2, tri.a3)
        assert np.allclose(th, (tri.theta1, tri.theta2, tri.theta3), atol=1e-10)


def test_beta_combinations():
    rng = np.random.default_rng(10)
    tri = sample_triangle(rng)
    assert 2 * tri.beta1 == pytest.approx(tri.a2 + tri.a3 - tri.a1, abs=1e-12)
    assert 2 * tri.beta2 == pytest.approx(tri.a1 + tri.a3 - tri.a2, abs=1e-12)
    assert 2 * tri.beta3 == pytest.approx(tri.a1 + tri.a2 - tri.a3, abs=1e-12)
    assert tri.beta0 == pytest.approx(math.pi - tri.beta1 - tri.beta2 - tri.beta3, abs=1e-12)


def test_fermat_points_on_curve_and_relations():
    rng = np.random.default_rng(12)
    for N in (2, 3, 5):
        tri = sample_triangle(rng)
        p1, p2, p3, p4 = sf.fermat_points_from_triangle(tri, N)
        for p in (p1, p2, p3, p4):
            assert p.curve_residual() < 1e-10
        # moduli cancel in the product/ratio of the displayed formulas
        assert abs(p1.x * p2.x - cmath.exp(-2j * tri.a2 / N)) < 1e-12
        ratio = (math.sin(tri.beta3) / math.sin(tri.beta1)) ** (2.0 / N)
        assert abs(p3.x / p4.x - ratio) < 1e-12


def test_octant_fermat_points_n3():
    tri = sf.spherical_sides_from_angles(math.pi / 2, math.pi / 2, math.pi / 2)
    for p in sf.fermat_points_from_triangle(tri, 3):
        assert p.curve_residual() < 1e-10
