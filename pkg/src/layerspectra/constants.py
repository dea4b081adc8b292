"""Geometric constants for the m = 4 setting (3-dimensional reference hypersurface)."""
import math

# area of the unit 2-sphere; boundary area of a geodesic sphere is W2 * r^2
W2 = 4.0 * math.pi
# volume of the unit ball in R^3, the normaliser for volume growth
V3 = 4.0 * math.pi / 3.0


def sphere_area(n):
    """Area of the unit n-sphere in R^(n+1)."""
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


def threshold(a):
    """Lowest transverse Dirichlet mode (pi / 2a)^2 of a slab of half-width ``a``."""
    return (math.pi / (2.0 * a)) ** 2
