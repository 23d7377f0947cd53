import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ordvar.errors import DomainError
from ordvar.losses import (
    ENTROPY, QUADRATIC, SYMMETRIC, LossSpec, custom_loss, linex, loss_deriv, loss_value,
    parse_loss, validate_loss,
)

ALL = [QUADRATIC, ENTROPY, SYMMETRIC, linex(-2), linex(-1), linex(1), linex(2)]


def test_entropy_zero_at_one():
    assert loss_value(ENTROPY, 1.0) == 0.0


def test_quadratic_value():
    assert loss_value(QUADRATIC, 3.0) == 4.0


def test_linex_value():
    assert loss_value(linex(-2), 2.0) == pytest.approx(math.exp(-2) + 2 - 1, rel=1e-14)


def test_symmetric_derivative():
    assert loss_deriv(SYMMETRIC, 2.0) == pytest.approx(0.75, rel=1e-15)


@pytest.mark.parametrize("loss", ALL, ids=lambda l: l.name)
def test_derivative_zero_at_one(loss):
    assert loss_deriv(loss, 1.0) == 0.0


@pytest.mark.parametrize("loss", ALL, ids=lambda l: l.name)
def test_finite_difference_at_1_7(loss):
    h = 1e-5
    fd = (loss.value(1.7 + h) - loss.value(1.7 - h)) / (2 * h)
    assert loss.deriv(1.7) == pytest.approx(fd, rel=1e-6)


@pytest.mark.parametrize("loss", ALL, ids=lambda l: l.name)
def test_derivative_sign_and_bowl(loss):
    grid = np.geomspace(0.01, 100, 401)
    d = loss.deriv(grid)
    assert np.all(d[grid < 1] < 0) and np.all(d[grid > 1] > 0)
    validate_loss(loss)


@given(t=st.floats(0.01, 100), loss=st.sampled_from(ALL))
def test_derivative_matches_central_difference(t, loss):
    h = 1e-6 * t
    fd = (loss.value(t + h) - loss.value(t - h)) / (2 * h)
    assert loss.deriv(t) == pytest.approx(fd, rel=1e-6, abs=1e-9)


@given(t=st.floats(0.01, 100), loss=st.sampled_from(ALL))
def test_nonnegative(t, loss):
    assert loss.value(t) >= 0


@pytest.mark.parametrize("t", [0.0, -1.0])
def test_domain(t):
    with pytest.raises(DomainError):
        QUADRATIC.value(t)
    with pytest.raises(DomainError):
        QUADRATIC.deriv(t)


def test_vectorized_shapes():
    out = ENTROPY.value(np.array([0.5, 1.0, 2.0]))
    assert out.shape == (3,)
    assert isinstance(ENTROPY.value(2.0), float)


def test_spec_validation():
    with pytest.raises(DomainError):
        LossSpec("huber")
    with pytest.raises(DomainError):
        LossSpec("linex")
    with pytest.raises(DomainError):
        LossSpec("linex", 0.0)
    with pytest.raises(DomainError):
        LossSpec("quadratic", 1.0)


@pytest.mark.parametrize("text,expected", [
    ("quadratic", QUADRATIC), ("Entropy", ENTROPY), (" symmetric ", SYMMETRIC),
    ("linex:a=-2", linex(-2)), ("linex:a=0.5", linex(0.5)), ("linex:a=1e0", linex(1)),
])
def test_parse(text, expected):
    assert parse_loss(text) == expected


@pytest.mark.parametrize("text", ["bogus", "linex", "linex:a=", "linex:a=0", "linex:a=abc"])
def test_parse_rejects(text):
    with pytest.raises(DomainError):
        parse_loss(text)


def test_linex_name_roundtrip():
    for loss in ALL:
        assert parse_loss(loss.name) == loss


def test_custom_loss_accepts_bowl():
    loss = custom_loss("quad+log2", lambda t: (t - 1) ** 2 + np.log(t) ** 2,
                       lambda t: 2 * (t - 1) + 2 * np.log(t) / t)
    assert loss.kind == "custom"
    assert loss.value(1.0) == 0.0


def test_custom_loss_rejects_non_bowl():
    with pytest.raises(DomainError):
        custom_loss("shifted", lambda t: (t - 2.0) ** 2, lambda t: 2 * (t - 2.0))
    with pytest.raises(DomainError):
        custom_loss("wiggly", lambda t: np.abs(t - 1) + 0.3 * np.sin(8 * t) ** 2 * np.abs(t - 1),
                    lambda t: np.sign(t - 1) * (1 + 0.3 * np.sin(8 * t) ** 2)
                    + 0.3 * 16 * np.sin(8 * t) * np.cos(8 * t) * np.abs(t - 1))
