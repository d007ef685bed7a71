import numpy as np
import pytest
from hypothesis import settings

from tchak.measures import DiscreteMeasure
from tchak.systems import COMPLEX, REAL, FunctionSystem, build_system

# property tests draw the same examples on every run, matching the
# determinism contract the package itself makes
settings.register_profile("reproducible", derandomize=True)
settings.load_profile("reproducible")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_system(rng, n, complex_field=False, kind=None):
    """A random smooth system for property tests.

    Real: random polynomial combinations; complex: random combinations
    of complex exponentials.  Possibly rank-deficient when ``kind`` is
    "deficient" (duplicates one function).
    """
    if complex_field:
        ks = rng.integers(-4, 5, size=n)
        coeffs = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))

        def ev(x):
            x = np.asarray(x, dtype=float)
            basis = np.exp(1j * np.outer(ks, x))
            return coeffs @ basis

        system = FunctionSystem(field=COMPLEX, n=n, evaluator=ev, family_tag="random-trig")
    else:
        coeffs = rng.standard_normal((n, n))

        def ev(x):
            x = np.asarray(x, dtype=float)
            basis = np.vstack([x**k for k in range(n)])
            return coeffs @ basis

        system = FunctionSystem(field=REAL, n=n, evaluator=ev, family_tag="random-poly")
    if kind == "deficient" and n >= 2:
        base = system.evaluator

        def ev2(x):
            vals = base(x)
            vals[-1] = vals[0]
            return vals

        system = FunctionSystem(field=system.field, n=n, evaluator=ev2, family_tag="deficient")
    return system


def random_measure(rng, m, lo=-1.0, hi=1.0):
    points = np.sort(rng.uniform(lo, hi, size=m))
    weights = rng.random(m)
    return DiscreteMeasure(points, weights)


@pytest.fixture
def monomials3():
    return build_system({"family": "monomial", "n": 3})
