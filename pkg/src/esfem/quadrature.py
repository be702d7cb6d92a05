"""Symmetric quadrature rules on the reference triangle {xi1, xi2 >= 0, xi1 + xi2 <= 1}.

Weights are normalised to sum to one, i.e. they integrate the mean value;
multiply by the element area for an integral.
"""
import numpy as np


def _orbit3(a, w):
    b = 1.0 - 2.0 * a
    bary = [(a, a, b), (a, b, a), (b, a, a)]
    return bary, [w] * 3


def _orbit6(a, b, w):
    c = 1.0 - a - b
    bary = [(a, b, c), (b, a, c), (a, c, b), (c, a, b), (b, c, a), (c, b, a)]
    return bary, [w] * 6


def _rule(*orbits):
    bary, weights = [], []
    for b, w in orbits:
        bary += b
        weights += w
    bary = np.array(bary)
    return bary[:, 1:], np.array(weights)


_RULES = {
    2: _rule(_orbit3(1.0 / 6.0, 1.0 / 3.0)),
    4: _rule(
        _orbit3(0.445948490915965, 0.223381589678011),
        _orbit3(0.091576213509771, 0.109951743655322),
    ),
    6: _rule(
        _orbit3(0.249286745170910, 0.116786275726379),
        _orbit3(0.063089014491502, 0.050844906370207),
        _orbit6(0.310352451033785, 0.053145049844816, 0.082851075618374),
    ),
}


def triangle_rule(order):
    """Return ``(xi, weights)`` exact for polynomials of total degree ``order``."""
    try:
        xi, w = _RULES[order]
    except KeyError:
        raise ValueError(f"quadrature order must be one of {sorted(_RULES)}") from None
    return xi.copy(), w / w.sum()


def barycentric(xi):
    """P1 shape function values (lambda0, lambda1, lambda2) at reference points."""
    xi = np.atleast_2d(xi)
    return np.column_stack([1.0 - xi[:, 0] - xi[:, 1], xi[:, 0], xi[:, 1]])


# d lambda_i / d xi_k
SHAPE_GRADIENTS = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])

CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def sample_points():
    """Corners plus the six interior degree-4 points: the L-infinity sampling set."""
    return np.vstack([CORNERS, triangle_rule(4)[0]])


def sampling_rule():
    """Sampling set with the degree-4 weights on its interior points (corners weigh 0)."""
    xi, w = triangle_rule(4)
    return np.vstack([CORNERS, xi]), np.concatenate([np.zeros(3), w])
