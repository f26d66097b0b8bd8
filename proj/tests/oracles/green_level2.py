"""Independent symbolic derivation of the first two Green-function levels on the
symmetric quadratic neck (h1 = h2 = x1^2/2, eps = 1/100, mu = 1).

Prints the frozen values used by tests/test_correctors.cpp.
"""
import sympy as sp

x1, x2, y = sp.symbols("x1 x2 y", real=True)
eps = sp.Rational(1, 100)
mu = 1
h = x1**2 / 2
delta = eps + 2 * h
half = delta / 2


def dirichlet_solve(rhs):
    """v with mu v'' = -rhs in x2, v(+-delta/2) = 0."""
    inner = sp.integrate(rhs.subs(x2, y), (y, -half, x2))
    outer = sp.integrate(inner.subs(x2, y), (y, -half, x2))
    v = -outer / mu
    # add the linear part that clears the top value
    top = v.subs(x2, half)
    v = v - top * (x2 + half) / delta
    return sp.simplify(v)


def partner(v1):
    return sp.simplify(-sp.integrate(sp.diff(v1, x1).subs(x2, y), (y, -half, x2)))


v1_1 = sp.Rational(1, 2) + x2 / delta
v2_1 = partner(v1_1)
p_1 = sp.integrate((mu * sp.diff(v2_1, x2, 2)).subs(x2, y), (y, 0, x2))
f1_first = sp.simplify(mu * sp.diff(v1_1, x1, 2) - sp.diff(p_1, x1))
f1_second = sp.simplify(mu * sp.diff(v2_1, x1, 2))

v1_2 = dirichlet_solve(f1_first)
v2_2 = partner(v1_2)
p_2 = sp.integrate((f1_second + mu * sp.diff(v2_2, x2, 2)).subs(x2, y), (y, 0, x2))
f2_first = sp.simplify(mu * sp.diff(v1_2, x1, 2) - sp.diff(p_2, x1))
f2_second = sp.simplify(mu * sp.diff(v2_2, x1, 2))

points = [(sp.Rational(1, 10), sp.Rational(3, 10)), (sp.Rational(3, 10), sp.Rational(-1, 5)),
          (sp.Rational(-1, 4), sp.Rational(2, 5))]
for a, frac in points:
    sub = {x1: a}
    sub[x2] = frac * delta.subs(x1, a)
    vals = [e.subs(sub) for e in (v1_2, v2_2, p_2, f2_first, f2_second)]
    print(f"{{{float(a)!r}, {float(frac)!r}, " + ", ".join(f"{sp.N(v, 17)}" for v in vals) + "},")
