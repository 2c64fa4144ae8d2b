import random

import pytest

from cartanvp import forms as fm
from cartanvp import symexpr as sx


def rand_poly(rng, names, degree=2, terms=3, coeff_range=4):
    """Random polynomial with small integer coefficients."""
    acc = sx.ZERO
    for _ in range(terms):
        c = rng.randint(-coeff_range, coeff_range)
        if c == 0:
            c = 1
        term = sx.num(c)
        for _ in range(rng.randint(0, degree)):
            term = term * sx.var(rng.choice(names))
        acc = acc + term
    return acc


def rand_form(rng, chart, degree, coeff_terms=2):
    import itertools

    names = list(chart.coords)
    idxs = list(itertools.combinations(range(chart.dim), degree))
    rng.shuffle(idxs)
    take = idxs[: min(3, len(idxs))]
    return fm.DiffForm(
        chart,
        degree,
        {i: rand_poly(rng, names, degree=2, terms=coeff_terms) for i in take},
    )


def rand_field(rng, chart):
    names = list(chart.coords)
    return fm.VecField(
        chart, [rand_poly(rng, names, degree=1, terms=2) for _ in range(chart.dim)]
    )


@pytest.fixture
def rng():
    return random.Random(0xC4A7)


@pytest.fixture
def chart5():
    return fm.BundleChart(["x1", "x2"], ["z1", "z2", "z3"])


@pytest.fixture
def chart6w():
    return fm.BundleChart(["x1", "x2"], ["z1", "z2", "z3"], ["w"])
