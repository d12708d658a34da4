#!/usr/bin/env python3
"""Signature manifolds and the local feedback-equivalence decision.

Samples the 14-dimensional signature image of several systems, reports the
intrinsic dimension and the selected chart, and runs the three canonical
comparisons:

  * a generic system against its own pushforward  -> EQUIVALENT,
  * two systems with disjoint signature images    -> NOT_EQUIVALENT,
  * two systems with equal constant signatures    -> INCONCLUSIVE
    (the criterion needs a 3-dimensional signature).
"""

from fbsig import (SystemDef, TransformedSystem, build_cloud, compare,
                   random_feedback)

GRID = (9, 9, 9)


def describe(cloud):
    chart = "none" if cloud.chart is None else ",".join(cloud.chart)
    print("   %-24s %5d samples, %2d skipped, dim=%s, chart=%s"
          % (cloud.system_id, len(cloud), len(cloud.skipped),
             cloud.intrinsic_dim, chart))
    return cloud


def main():
    cubic = SystemDef.from_strings(
        "cubic", "u1^3/3 + x*u1 + u^2 + 2",
        {"x": [0.2, 1.0], "u": [0.2, 0.8], "u1": [1.8, 2.6]})
    sq = SystemDef.from_strings(
        "sq", "u1^2", {"x": [-1, 1], "u": [-1, 1], "u1": [1, 2]})
    sq2 = SystemDef.from_strings(
        "sq2", "2*u1^2", {"x": [-1, 1], "u": [-1, 1], "u1": [1, 2]})
    exp34 = SystemDef.from_strings(
        "exp34", "exp(u1)", {"x": [-1, 1], "u": [-1, 1], "u1": [3, 4]})

    print("=" * 72)
    print("Sampled signature clouds")
    print("=" * 72)
    cloud_cubic = describe(build_cloud(cubic, GRID))
    cloud_sq = describe(build_cloud(sq, GRID))
    cloud_sq2 = describe(build_cloud(sq2, GRID))
    cloud_exp = describe(build_cloud(exp34, GRID))

    phi = random_feedback(7, (cubic.domain.x, cubic.domain.u))
    pushed = TransformedSystem(phi, cubic, name="pushforward(cubic)")
    cloud_pushed = describe(build_cloud(pushed, GRID))

    print()
    print("=" * 72)
    print("Equivalence verdicts")
    print("=" * 72)
    for label, a, b in [
        ("cubic  vs  its pushforward", cloud_cubic, cloud_pushed),
        ("sq     vs  exp(u1) on u1 in [3,4]", cloud_sq, cloud_exp),
        ("sq     vs  2*u1^2", cloud_sq, cloud_sq2),
    ]:
        verdict = compare(a, b)
        print("%-36s -> %s" % (label, verdict.status))
        print("   overlap %.3f, max residual %.3e"
              % (verdict.overlap_fraction, verdict.max_residual))
        for note in verdict.notes:
            print("   note:", note)


if __name__ == "__main__":
    main()
