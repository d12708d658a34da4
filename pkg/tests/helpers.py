"""Shared fixtures-in-spirit: canonical systems and sampling utilities."""

import numpy as np

from fbsig import SystemDef, regularity, system_jet

#: Five systems, all regular with comfortable margin on their boxes.
CANONICAL = {
    "sq": ("u1^2", {"x": [-1, 1], "u": [-1, 1], "u1": [1, 2]}),
    "expu1": ("exp(u1)", {"x": [-1, 1], "u": [-1, 1], "u1": [2, 3]}),
    "cubic": ("u1^3/3 + x*u1 + u^2 + 2",
              {"x": [0.2, 1.0], "u": [0.2, 0.8], "u1": [1.8, 2.6]}),
    "squ": ("u1^2 + u", {"x": [-1, 1], "u": [0.5, 1.5], "u1": [1.5, 2.5]}),
    "mix": ("exp(u1) + x*u + 0.3*u*u1 + 0.1*x*u1^2 + 0.2*u^2 + 0.1*x*u*u1",
            {"x": [0.3, 0.9], "u": [0.3, 0.9], "u1": [1.5, 2.2]}),
}


def make_system(name) -> SystemDef:
    f_text, domain = CANONICAL[name]
    return SystemDef.from_strings(name, f_text, domain)


def all_systems():
    return [make_system(name) for name in CANONICAL]


def sample_regular_points(system, n, seed=0, margin=1e-3, max_tries=10000):
    """Seeded points of the domain whose scaled regularity magnitudes all
    exceed `margin`."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(max_tries):
        if len(out) == n:
            break
        p = system.domain.sample(rng)
        flags = regularity(system_jet(system, p, 2))
        if min(flags.magnitudes) > margin:
            out.append(p)
    if len(out) < n:
        raise AssertionError("could not sample %d regular points" % n)
    return out


def fd_gradient(fn, p, h=1e-6):
    """Central-difference gradient of a scalar function of a 3-point."""
    g = np.zeros(3)
    for m in range(3):
        pp, pm = list(p), list(p)
        pp[m] += h
        pm[m] -= h
        g[m] = (fn(tuple(pp)) - fn(tuple(pm))) / (2 * h)
    return g


def fd_partial(fn, p, sigma, h=1e-4):
    """Central finite differences of a scalar function, orders <= 2."""
    total = sum(sigma)
    if total == 0:
        return fn(tuple(p))
    axes = [m for m in range(3) for _ in range(sigma[m])]
    if total == 1:
        m = axes[0]
        pp, pm = list(p), list(p)
        pp[m] += h
        pm[m] -= h
        return (fn(tuple(pp)) - fn(tuple(pm))) / (2 * h)
    if total == 2:
        m, n = axes
        if m == n:
            pp, pm = list(p), list(p)
            pp[m] += h
            pm[m] -= h
            return (fn(tuple(pp)) - 2 * fn(tuple(p)) + fn(tuple(pm))) / h ** 2
        out = 0.0
        for sm, sn, w in (((+1, +1), None, 1.0), ((+1, -1), None, -1.0),
                          ((-1, +1), None, -1.0), ((-1, -1), None, 1.0)):
            q = list(p)
            q[m] += sm[0] * h
            q[n] += sm[1] * h
            out += w * fn(tuple(q))
        return out / (4 * h ** 2)
    raise ValueError("finite differences implemented for orders <= 2")
