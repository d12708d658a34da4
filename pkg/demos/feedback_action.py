#!/usr/bin/env python3
"""How a feedback map acts on a control system.

Pushes dx/dt = u1^2 forward along simple maps with known closed-form images,
prints the transformed jets next to the expected values, and verifies the
defining relation G(X(x), U(x,u), U_x F + U_u u1) = X'(x) F(x,u,u1) on a
grid for a random map.
"""

import numpy as np

from fbsig import (FeedbackMap, SystemDef, invertibility_check,
                   lift_variables, pushforward_point, random_feedback,
                   transformed_jet)

SQ = SystemDef.from_strings("sq", "u1^2",
                            {"x": [-1, 1], "u": [-1, 1], "u1": [1, 2]})


def show_closed_form(title, phi, p, expect):
    jet = transformed_jet(phi, SQ, p, 2)
    print(title)
    print("   image point:", np.round(jet.point, 6))
    for sigma, label, want in expect:
        got = jet.partial(sigma)
        print("   %-8s = %-12.6g (expected %g)" % (label, got, want))


def main():
    print("=" * 72)
    print("Closed-form pushforwards of F = u1^2")
    print("=" * 72)
    show_closed_form("X = 2x, U = u  (image system G = 2 u1~^2 at (2,0,1)):",
                     FeedbackMap.from_strings("2*x", "u"), (1.0, 0.0, 1.0),
                     [((0, 0, 0), "g", 2.0), ((0, 0, 1), "g_u1", 4.0),
                      ((0, 0, 2), "g_u1u1", 4.0)])
    show_closed_form("X = x, U = 2u  (image system G = (u1~/2)^2 at (0,0,2)):",
                     FeedbackMap.from_strings("x", "2*u"), (0.0, 0.0, 1.0),
                     [((0, 0, 0), "g", 1.0), ((0, 0, 1), "g_u1", 1.0),
                      ((0, 0, 2), "g_u1u1", 0.5)])

    print()
    print("=" * 72)
    print("Invertibility screening")
    print("=" * 72)
    for x_text, u_text in (("2*x", "u"), ("x^2", "u"), ("x", "u^3")):
        phi = FeedbackMap.from_strings(x_text, u_text)
        report = invertibility_check(phi, ((-1, 1), (-1, 1)))
        print("X = %-6s U = %-6s -> %s" % (x_text, u_text, report))

    print()
    print("=" * 72)
    print("Defining relation residual for a random map")
    print("=" * 72)
    phi = random_feedback(3, (SQ.domain.x, SQ.domain.u))
    print("X(x)    =", phi.X.source_text)
    print("U(x, u) =", phi.U.source_text)
    worst = 0.0
    for p in SQ.domain.grid((4, 4, 4)):
        q = pushforward_point(phi, SQ, p)
        jet = transformed_jet(phi, SQ, p, 2)
        xp = phi.X({"x": lift_variables(p, 1)[0]})
        lhs = jet.partial((0, 0, 0))
        rhs = xp.partial((1, 0, 0)) * SQ.value(p)
        worst = max(worst, abs(lhs - rhs))
        assert np.allclose(q, jet.point)
    print("max |G(Psi(p)) - X'(x) F(p)| over a 4x4x4 grid: %.3e" % worst)


if __name__ == "__main__":
    main()
