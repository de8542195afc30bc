"""Closed forms for compound Poisson models with Exp(mu) claims.

For these models psi(b) = q is polynomial after clearing (mu + b), so the
q-scale function is a finite sum over the roots b_i:
W(x) = sum_i e^{b_i x} / psi'(b_i).
"""

import numpy as np


def _roots(c, sigma, lam, mu, q):
    # (c b + s2 b^2 / 2)(mu + b) - lam b - q (mu + b) = 0
    s2 = sigma**2 / 2
    coeffs = [s2, c + s2 * mu, c * mu - lam - q, -q * mu]
    if sigma == 0:
        coeffs = coeffs[1:]
    return np.roots(coeffs)


def _psi_prime(c, sigma, lam, mu, b):
    return c + sigma**2 * b - lam * mu / (mu + b) ** 2


def scale(c, sigma, lam, mu, q, x):
    r = _roots(c, sigma, lam, mu, q)
    return float(np.real(sum(np.exp(b * x) / _psi_prime(c, sigma, lam, mu, b) for b in r)))


def scale_prime(c, sigma, lam, mu, q, x):
    r = _roots(c, sigma, lam, mu, q)
    return float(np.real(sum(b * np.exp(b * x) / _psi_prime(c, sigma, lam, mu, b) for b in r)))


def z_scale(c, sigma, lam, mu, q, x):
    r = _roots(c, sigma, lam, mu, q)
    total = 0.0
    for b in r:
        integral = x if abs(b) < 1e-14 else np.expm1(b * x) / b
        total += integral / _psi_prime(c, sigma, lam, mu, b)
    return float(1.0 + q * np.real(total))


def phi(c, sigma, lam, mu, q):
    return float(np.max(np.real(_roots(c, sigma, lam, mu, q))))


def ruin_laplace(c, sigma, lam, mu, q, x):
    """E[e^{-q tau}; tau < inf]."""
    p = phi(c, sigma, lam, mu, q)
    return z_scale(c, sigma, lam, mu, q, x) - q / p * scale(c, sigma, lam, mu, q, x)


def creep_laplace(c, sigma, lam, mu, q, x):
    """E[e^{-q tau}; ruin by creeping] = sigma^2 / 2 (W'(x) - Phi W(x))."""
    if sigma == 0:
        return 0.0
    p = phi(c, sigma, lam, mu, q)
    return sigma**2 / 2 * (scale_prime(c, sigma, lam, mu, q, x) - p * scale(c, sigma, lam, mu, q, x))


def discounted_deficit(c, sigma, lam, mu, q, x):
    """Deficits after a claim are Exp(mu) and independent of the ruin time."""
    return (ruin_laplace(c, sigma, lam, mu, q, x) - creep_laplace(c, sigma, lam, mu, q, x)) / mu
