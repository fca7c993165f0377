"""Symbolic check of the Laplace-Beltrami operator used by the torus forcing.

The torus is (rho - 1)^2 + z^2 = 1/9 with rho = sqrt(x^2 + y^2). For the
polynomial p = x (x^4 - 10 x^2 y^2 + 5 y^4) (x^2 + y^2 - 60 z^2),

    lap_M p = lap p - n.H n - (div n)(n . grad p),

where n is the unit normal extended off the surface by normalizing the
gradient of the level-set function. On the surface n = 3((rho - 1) x / rho,
(rho - 1) y / rho, z) and div n = 3 (2 rho - 1) / rho, which is the form
evaluated in `torus_laplace_beltrami_p`.

Run with `python docs/torus_forcing.py` (needs sympy).
"""

import math

import sympy as sp

x, y, z = sp.symbols("x y z", real=True)
rho = sp.sqrt(x**2 + y**2)
level = (1 - rho) ** 2 + z**2 - sp.Rational(1, 9)
p = x * (x**4 - 10 * x**2 * y**2 + 5 * y**4) * (x**2 + y**2 - 60 * z**2)

coords = (x, y, z)
grad_level = sp.Matrix([sp.diff(level, v) for v in coords])
n = grad_level / sp.sqrt(grad_level.dot(grad_level))
grad_p = sp.Matrix([sp.diff(p, v) for v in coords])
hess_p = sp.hessian(p, coords)
lap_p = sum(sp.diff(p, v, 2) for v in coords)
div_n = sum(sp.diff(n[i], v) for i, v in enumerate(coords))
lb_exact = lap_p - (n.T * hess_p * n)[0] - div_n * n.dot(grad_p)

n_surface = 3 * sp.Matrix([(rho - 1) * x / rho, (rho - 1) * y / rho, z])
div_n_surface = 3 * (2 * rho - 1) / rho
lb_surface = (
    lap_p - (n_surface.T * hess_p * n_surface)[0] - div_n_surface * n_surface.dot(grad_p)
)


def torus_point(theta, phi):
    r = 1.0 + math.cos(phi) / 3.0
    return {x: r * math.cos(theta), y: r * math.sin(theta), z: math.sin(phi) / 3.0}


worst = 0.0
for theta, phi in [(0.7, 1.1), (2.3, -0.4), (-1.9, 2.8), (0.1, 0.0)]:
    pt = torus_point(theta, phi)
    a = float(lb_exact.subs(pt))
    b = float(lb_surface.subs(pt))
    worst = max(worst, abs(a - b) / max(1.0, abs(a)))
    print(f"theta {theta:5.2f} phi {phi:5.2f}: lap_M p = {a:.12e} (surface form {b:.12e})")
print(f"largest relative difference {worst:.2e}")
assert worst < 1e-10
