"""Independent reference formulas used by the tests."""
import numpy as np
from scipy.special import gamma as G


def fractional_laplacian_constant(s):
    """Normalizing constant of (-Delta)^s in one dimension."""
    return s * 4 ** s * G(0.5 + s) / (np.sqrt(np.pi) * G(1 - s))


def torsion_profile(x, s):
    """Solution of A u = 1 on (-1, 1), u = 0 outside, for the unnormalized operator

        A u(x) = 2 p.v. int (u(x) - u(y)) / |x - y|^(1 + 2s) dy.

    Since A = (2 / C_s) (-Delta)^s, this is C_s / 2 times the classical
    torsion function G(1/2) / (4^s G(1/2 + s) G(1 + s)) (1 - x^2)^s.
    """
    classical = G(0.5) / (4 ** s * G(0.5 + s) * G(1 + s))
    return 0.5 * fractional_laplacian_constant(s) * classical * np.maximum(1 - x ** 2, 0) ** s
