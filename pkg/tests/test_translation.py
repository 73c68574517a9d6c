import math

import mpmath as mp
import pytest

from frechet_flow import (
    certify_membership,
    cinf_seminorm,
    gaussian,
    polynomial,
    translate,
    translate_detailed,
)
from frechet_flow.translation import (
    CertificateError,
    fast_growth,
    poly_times_gaussian,
    shifted,
)

CUBIC = [0.0, 0.0, 0.0, 1.0]


def hermite_sups_oracle(m, j, max_order, points=801):
    """Independent pure-python sups of the gaussian derivatives on [-j, j]."""
    xs = [(-j + 2 * j * k / (points - 1)) for k in range(points)]
    sups = []
    for x in xs:
        d_prev = math.exp(-x * x)
        d_cur = -2 * x * d_prev
        row = [d_prev, d_cur]
        for n in range(1, max_order + m + 1):
            d_next = -2 * x * d_cur - 2 * n * d_prev
            row.append(d_next)
            d_prev, d_cur = d_cur, d_next
        sups.append(row)
    out = []
    for n in range(m, m + max_order + 1):
        out.append(max(abs(row[n]) for row in sups))
    return out


def test_gaussian_sup_values():
    assert cinf_seminorm(gaussian(), 0, 2) == pytest.approx(1.0, abs=1e-9)
    with mp.workdps(30):
        expected = float(mp.sqrt(2 / mp.e))
    assert cinf_seminorm(gaussian(), 1, 2) == pytest.approx(expected, abs=1e-5)
    assert expected == pytest.approx(0.8578, abs=5e-5)


def test_zero_function_sup_is_zero():
    zero = polynomial([0.0])
    for m, j in ((0, 1), (2, 3)):
        assert cinf_seminorm(zero, m, j) == 0.0


def test_sup_grid_refinement_is_stable():
    # halving the sampling step moves the built-ins' sups by less than 1e-6
    for phi in (gaussian(), polynomial(CUBIC), poly_times_gaussian([1.0, 0.5])):
        for m, j in ((0, 2), (1, 2), (3, 1)):
            coarse = cinf_seminorm(phi, m, j, step=1e-3)
            fine = cinf_seminorm(phi, m, j, step=5e-4)
            assert abs(fine - coarse) < 1e-6 * (1.0 + abs(fine))


def test_gaussian_certificate_at_order_forty():
    cert = certify_membership(gaussian(), 0, 1, 40)
    assert not cert.failed
    assert cert.observed_ratio <= 10.0
    assert cert.conventional_m == 2
    # the conventional rate 2j collapses under the audit: the derivative
    # sups grow faster than 2^n; checked against an independent recurrence
    sups = hermite_sups_oracle(0, 1, 40)
    scale = 1.0 + sups[0]
    ratio_at_two = max(s / (scale * 2.0**n) for n, s in enumerate(sups))
    assert ratio_at_two > 10.0
    assert not cert.conventional_passes
    # minimality: one integer below the reported rate the ratio breaks the cap
    below = max(s / (scale * float(cert.minimal_m - 1) ** n) for n, s in enumerate(sups))
    assert below > 10.0
    at = max(s / (scale * float(cert.minimal_m) ** n) for n, s in enumerate(sups))
    assert at <= 10.0 * (1 + 1e-6)


def test_polynomial_certificate_is_trivial():
    # derivatives vanish beyond the degree: on [-2, 2] the sups are
    # (8, 12, 12, 6, 0, ...), within the cap of the function's own scale
    # already at rate 1
    cert = certify_membership(polynomial(CUBIC), 0, 2, 20)
    assert not cert.failed
    assert cert.minimal_m == 1
    assert cert.observed_ratio <= 10.0
    assert cert.vanishing_order == 4


def test_fast_growth_certificate_fails():
    cert = certify_membership(fast_growth(), 0, 1, 40)
    assert cert.failed
    with pytest.raises(CertificateError):
        translate(fast_growth(), 0.5, 0.0)


def test_translate_time_zero_is_one_term():
    detail = translate_detailed(gaussian(), 0.0, 0.7, 1e-10)
    assert detail.value == gaussian()(0.7)
    assert detail.terms == 1
    assert detail.tail_bound == 0.0


def test_translate_gaussian_half_step():
    value = translate(gaussian(), 0.5, 0.0, 1e-10)
    with mp.workdps(30):
        expected = float(mp.e ** mp.mpf("-0.25"))
    assert value == pytest.approx(expected, abs=1e-9)
    assert expected == pytest.approx(0.7788008, abs=1e-7)


def test_translate_cubic_exact_in_four_terms():
    detail = translate_detailed(polynomial(CUBIC), 1.0, 1.0, 1e-10)
    assert detail.value == 8.0
    assert detail.terms == 4
    assert detail.tail_bound == 0.0


def test_translation_identity_over_the_window(rng):
    phi = gaussian()
    cert = certify_membership(phi, 0, 4, 40)
    for t in (-1.0, -0.3, 0.25, 1.0):
        for s in (-2.0, -0.7, 0.0, 1.3, 2.0):
            value = translate(phi, t, s, 1e-8, cert)
            assert abs(value - phi(s + t)) <= 1e-7


def test_translation_identity_for_poly_times_gaussian():
    phi = poly_times_gaussian([1.0, 1.0])
    cert = certify_membership(phi, 0, 3, 40)
    for t, s in ((0.5, 0.0), (-0.4, 1.0)):
        assert abs(translate(phi, t, s, 1e-8, cert) - phi(s + t)) <= 1e-6


def test_translation_group_law_via_nested_series(rng):
    phi = gaussian()
    for _ in range(20):
        t, v, s = rng.uniform(-0.8, 0.8, size=3)
        direct = translate(phi, t + v, s, 1e-9)
        nested = translate(shifted(phi, v), t, s, 1e-9)
        assert abs(direct - nested) <= 1e-7


def test_derivative_oracle_consistent_with_finite_differences(rng):
    phi = gaussian()
    for n in range(6):
        x = float(rng.uniform(-1.5, 1.5))
        errors = []
        for step in (1e-3, 5e-4):
            fd = (phi.derivative(n, x + step) - phi.derivative(n, x - step)) / (
                2 * step
            )
            errors.append(abs(fd - phi.derivative(n + 1, x)))
        # second order: halving the step cuts the error by about four
        if errors[0] > 1e-12:
            assert errors[1] <= errors[0] / 2.5


def test_poly_times_gaussian_leibniz_table():
    phi = poly_times_gaussian([0.0, 1.0])  # x * exp(-x^2)
    x = 0.3
    direct = phi.derivative(1, x)
    expected = math.exp(-x * x) * (1 - 2 * x * x)
    assert direct == pytest.approx(expected, rel=1e-12)


def test_translate_requires_positive_tolerance():
    with pytest.raises(ValueError):
        translate(gaussian(), 0.5, 0.0, 0.0)
