import math

import numpy as np
import pytest
from scipy import integrate, stats

from crypt_regimes.asymptotics.laws import (
    BernoulliMix,
    Exp1,
    Hypoexp,
    NullBoundarySigma,
    NullBoundaryTau,
    PointMass,
    Rayleigh,
    UniformInterval,
    limit_cdf,
    limit_pdf,
    sample_limit,
)
from crypt_regimes.core import RngStream

CONTINUOUS = [Exp1(), Rayleigh(), Hypoexp(1.0), Hypoexp(0.4), Hypoexp(1 + 1e-12), NullBoundaryTau(2.0),
              NullBoundaryTau(0.7), NullBoundarySigma(2.0), NullBoundarySigma(5.0), UniformInterval(0.5, 1.0)]


def test_examples():
    assert limit_cdf(Exp1(), math.log(2)) == pytest.approx(0.5)
    assert limit_cdf(Rayleigh(), 0.0) == 0.0
    assert limit_cdf(Hypoexp(1.0), 1.0) == pytest.approx(1 - 2 / math.e, abs=1e-12)
    assert 1 - 2 / math.e == pytest.approx(0.26424, abs=1e-5)


def test_null_tau_continuity():
    law = NullBoundaryTau(2.0)
    left, right = law.cdf(0.5 - 1e-15), law.cdf(0.5 + 1e-15)
    assert abs(left - right) < 1e-12
    assert law.cdf(0.5) == pytest.approx(1 - math.exp(-0.5), abs=1e-14)


def test_hypoexp_matches_convolution():
    A = 0.4
    x = np.linspace(0, 8, 9)
    ref = [integrate.quad(lambda s: math.exp(-s) * (1 - math.exp(-(t - s) / A)), 0, t)[0] for t in x]
    assert np.allclose(Hypoexp(A).cdf(x), ref, atol=1e-10)


def test_hypoexp_equal_rate_branch_is_smooth():
    t = np.linspace(0, 10, 50)
    assert np.allclose(Hypoexp(1 + 1e-12).cdf(t), Hypoexp(1.0).cdf(t), atol=1e-12)
    assert np.allclose(Hypoexp(1 + 1e-6).cdf(t), Hypoexp(1.0).cdf(t), atol=1e-5)


@pytest.mark.parametrize("law", CONTINUOUS, ids=repr)
def test_cdf_shape(law):
    grid = np.concatenate([np.linspace(-1, 30, 3001), [1e3]])
    f = law.cdf(grid)
    assert np.all(np.diff(f) >= -1e-15)
    assert f[0] == 0.0 and f[-1] == pytest.approx(1.0, abs=1e-12)
    # right-continuity
    assert np.allclose(law.cdf(grid[:-1] + 1e-13), f[:-1], atol=1e-9)


@pytest.mark.parametrize("law", CONTINUOUS, ids=repr)
def test_pdf_integrates_to_one(law):
    breaks = [0.5, 1.0] if isinstance(law, (NullBoundaryTau, NullBoundarySigma, UniformInterval)) else []
    pdf = lambda x: float(law.pdf(x))
    head, _ = integrate.quad(pdf, 0, 2, points=breaks, limit=200, epsabs=1e-13, epsrel=1e-13)
    tail, _ = integrate.quad(pdf, 2, np.inf, limit=200, epsabs=1e-13, epsrel=1e-13)
    total = head + tail
    assert total == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("law", CONTINUOUS, ids=repr)
def test_pdf_is_derivative_of_cdf(law):
    xs = np.array([0.55, 0.6, 0.8, 0.95, 1.5, 3.0])
    h = 1e-6
    num = (law.cdf(xs + h) - law.cdf(xs - h)) / (2 * h)
    assert np.allclose(num, law.pdf(xs), atol=1e-5)


def test_null_sigma_density_matches_closed_form():
    A = 3.0
    law = NullBoundarySigma(A)
    for x in (0.5, 0.6, 0.75, 0.99, 1.0):
        inner = math.sqrt(math.pi / 2) * A * (math.erf(A / (2 * math.sqrt(2))) - math.erf(A * (1 - x) / math.sqrt(2)))
        assert law.pdf(x) == pytest.approx(inner + 2 * math.exp(-A * A / 8), abs=1e-9)
    assert law.pdf(0.3) == 0.0


@pytest.mark.parametrize("law", CONTINUOUS + [PointMass(0.3), BernoulliMix(2.0)], ids=repr)
def test_sampler_matches_cdf(law):
    x = sample_limit(law, RngStream.from_seed(17), 100_000)
    if law.continuous:
        assert stats.kstest(x, law.cdf).pvalue > 0.01
    elif isinstance(law, PointMass):
        assert np.all(x == 0.3)
    else:
        assert abs(np.mean(x == 0) - law.p_zero) < 4 * math.sqrt(law.p_zero * (1 - law.p_zero) / x.size)
        assert stats.kstest(x[x > 0], "uniform").pvalue > 0.01


def test_bernoulli_mix_cdf():
    law = BernoulliMix(2.0)
    assert law.cdf(-0.1) == 0
    assert law.cdf(0.0) == pytest.approx(1 / 3)
    assert law.cdf(0.5) == pytest.approx(1 / 3 + 2 / 3 * 0.5)
    assert law.cdf(1.0) == pytest.approx(1.0)


def test_point_mass_has_no_pdf():
    with pytest.raises(NotImplementedError):
        limit_pdf(PointMass(1.0), 1.0)


def test_uniform_is_half_open():
    law = UniformInterval(0.5, 1.0)
    assert law.pdf(0.5) == 0 and law.pdf(1.0) == 2
    x = law.sample(RngStream.from_seed(1), 10_000)
    assert x.min() > 0.5 and x.max() <= 1.0


def test_describe():
    assert Hypoexp(2.0).describe() == {"law": "Hypoexp", "A": 2.0}
    assert Exp1() == Exp1() and Hypoexp(1.0) != Hypoexp(2.0)
