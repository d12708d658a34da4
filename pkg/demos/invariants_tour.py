#!/usr/bin/env python3
"""Tour of the differential invariants J and K.

Evaluates the basic invariants on a few systems, shows that the closed-form
K agrees with the value extracted from the commutator of the invariant
derivations, and demonstrates numerically that J and K do not change under a
feedback transformation.
"""

import numpy as np

from fbsig import (SystemDef, bracket_scalars, eval_J, eval_K,
                   random_feedback, regularity, system_jet, transformed_jet)

SYSTEMS = [
    ("u1^2", {"x": [-1, 1], "u": [-1, 1], "u1": [1, 2]}),
    ("exp(u1)", {"x": [-1, 1], "u": [-1, 1], "u1": [2, 3]}),
    ("u1^2 + u", {"x": [-1, 1], "u": [0.5, 1.5], "u1": [1.5, 2.5]}),
    ("u1^3/3 + x*u1 + u^2 + 2",
     {"x": [0.2, 1.0], "u": [0.2, 0.8], "u1": [1.8, 2.6]}),
]


def main():
    print("=" * 72)
    print("Invariants at the center of each system's domain")
    print("=" * 72)
    for f_text, domain in SYSTEMS:
        system = SystemDef.from_strings(f_text, f_text, domain)
        p = tuple((lo + hi) / 2 for lo, hi in system.domain.intervals)
        jet = system_jet(system, p, 4)
        j = eval_J(jet)
        k = eval_K(jet)
        j_br, k_br, l_br = bracket_scalars(jet)
        print("F = %-28s at %s" % (f_text, np.round(p, 3)))
        print("   J = %.12g   (from [n2,n1] = J n1:  %.12g)" % (j, j_br))
        print("   K = %.12g   (from [n3,n1] = K n2:  %.12g)" % (k, k_br))
        print("   L = %.12g   (no closed form; brackets only)" % l_br)

    print()
    print("=" * 72)
    print("Feedback invariance: J and K before and after a random map")
    print("=" * 72)
    system = SystemDef.from_strings("cubic", *SYSTEMS[3])
    phi = random_feedback(42, (system.domain.x, system.domain.u))
    print("X(x)    =", phi.X.source_text)
    print("U(x, u) =", phi.U.source_text)
    rng = np.random.default_rng(0)
    print("%-28s %-14s %-14s %-10s" % ("point", "J source", "J image", "|diff|"))
    for _ in range(5):
        p = system.domain.sample(rng)
        jet_f = system_jet(system, p, 4)
        if min(regularity(jet_f).magnitudes) < 1e-2:
            continue
        jet_g = transformed_jet(phi, system, p, 4)
        jf, jg = eval_J(jet_f), eval_J(jet_g)
        print("%-28s %-14.8g %-14.8g %.2e"
              % (np.round(p, 4), jf, jg, abs(jf - jg)))


if __name__ == "__main__":
    main()
