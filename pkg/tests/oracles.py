"""Independent reference computations shared by the test modules."""

import random
from fractions import Fraction

import mpmath

from singmod.modfun import j_eval, reduce_to_fundamental_domain
from singmod.trees import canonicalize, matmul

ZERO_THRESHOLD = mpmath.mpf(2) ** -64


def random_rational(rng, bound=20):
    return Fraction(rng.randint(-bound, bound), rng.randint(1, bound))


def random_element_set(rng, max_size=6, bound=20):
    """Up to ``max_size`` pairwise distinct canonical elements from rational matrices."""
    size = rng.randint(1, max_size)
    out = []
    while len(out) < size:
        m = tuple(random_rational(rng, bound) for _ in range(4))
        if m[0] * m[3] - m[1] * m[2] <= 0:
            continue
        g = canonicalize(m)
        if g not in out:
            out.append(g)
    return out


def numeric_j_is_zero(m, bits=128):
    """``|j(m . zeta)| < 2^-64`` judged from a 128-bit evaluation.

    The point is first moved to the fundamental domain.  For Im z > 2 the
    q-expansion gives |j| > e^(4 pi) - 744 - 2 * 196884 e^(-4 pi) > 0, so no
    evaluation is needed.
    """
    a, b, c, d = (int(x) for x in m)
    size = max(abs(a), abs(b), abs(c), abs(d), 2).bit_length()
    with mpmath.workprec(bits + 8 * size + 64):
        zeta = mpmath.mpc(-0.5, mpmath.sqrt(3) / 2)
        w = (a * zeta + b) / (c * zeta + d)
        z, _ = reduce_to_fundamental_domain(w)
        if z.imag > 2:
            return False
    ball = j_eval(z, bits)
    return abs(ball.center) + ball.radius < ZERO_THRESHOLD


def separation_agrees(elems, witness):
    """Numeric oracle on every index of a witness; returns per-index booleans."""
    T = witness.translation
    out = []
    for e in elems:
        m = matmul(matmul(e.matrix, T), witness.gamma)
        out.append(numeric_j_is_zero(m))
    return tuple(out)


def make_rng(seed):
    return random.Random(seed)


def bidirectional_bfs(u, v, limit=6):
    """Tree distance by breadth-first search grown from both ends.

    Uses nothing but :func:`singmod.trees.neighbors`; returns None beyond ``limit``.
    """
    from singmod.trees import neighbors

    if u == v:
        return 0
    dist_u, dist_v = {u: 0}, {v: 0}
    front_u, front_v = [u], [v]
    steps = 0
    while steps < limit:
        # grow the smaller side
        if len(front_u) <= len(front_v):
            front, dist, other = front_u, dist_u, dist_v
        else:
            front, dist, other = front_v, dist_v, dist_u
        nxt = []
        best = None
        for w in front:
            for nb in neighbors(w):
                if nb in dist:
                    continue
                dist[nb] = dist[w] + 1
                if nb in other:
                    total = dist[nb] + other[nb]
                    best = total if best is None else min(best, total)
                nxt.append(nb)
        steps += 1
        if best is not None:
            return best if best <= limit else None
        if front is front_u:
            front_u = nxt
        else:
            front_v = nxt
    return None
