import numpy as np

from src.cf_core import DigitStream, QuadraticSurd, is_square


def random_surd(rng: np.random.Generator, max_discriminant: int = 10_000, max_shift: int = 50,
                max_denominator: int = 20) -> QuadraticSurd:
    """Seeded (P + sqrt(D)) / R with D not a perfect square"""
    while True:
        D = int(rng.integers(2, max_discriminant + 1))
        if not is_square(D):
            break
    P = int(rng.integers(-max_shift, max_shift + 1))
    R = int(rng.integers(1, max_denominator + 1))
    if rng.random() < 0.5:
        R = -R
    return QuadraticSurd(P, D, R)


def random_digit_stream(rng: np.random.Generator, horizon: int = 40, max_digit: int = 10) -> DigitStream:
    """[0; a1..a_horizon] with digits uniform on 1..max_digit"""
    digits = rng.integers(1, max_digit + 1, size=horizon)
    return DigitStream(0, tuple(int(d) for d in digits))


def random_streams(count: int, seed: int, horizon: int = 40, max_digit: int = 10):
    return [random_digit_stream(np.random.default_rng([seed, i]), horizon, max_digit) for i in range(count)]


def random_surds(count: int, seed: int):
    return [random_surd(np.random.default_rng([seed, i])) for i in range(count)]
