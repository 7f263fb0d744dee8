"""Slow reference implementations used only by the tests."""
import functools


def brute_dyadic_cost(bounds, j, k, d):
    """Exhaustive minimum of sum |I|^d over sets of closed dyadic intervals
    (levels j..k) covering a union of intervals inside [0, 1].

    Coverage is checked on a point set fine enough to decide it: every
    endpoint, every level-k dyadic point and half point inside the set, and
    the midpoints between consecutive such points.
    """
    bounds = [tuple(map(float, b)) for b in bounds]
    if not bounds:
        return 0.0
    inside = lambda x: any(lo <= x <= hi for lo, hi in bounds)
    cand = []
    for lv in range(j, k + 1):
        for m in range(2**lv):
            a, e = m / 2**lv, (m + 1) / 2**lv
            if any(lo <= e and hi >= a for lo, hi in bounds):
                cand.append((a, e, 2.0 ** (-lv * d)))
    pts = set()
    for lo, hi in bounds:
        pts.update((lo, hi))
        for m in range(2**k + 1):
            for x in (m / 2**k, (m + 0.5) / 2**k):
                if lo <= x <= hi:
                    pts.add(x)
    pts = sorted(pts)
    ext = list(pts) + [(p + q) / 2 for p, q in zip(pts, pts[1:]) if inside((p + q) / 2)]
    masks = [sum(1 << i for i, x in enumerate(ext) if a <= x <= e) for a, e, _ in cand]
    full = (1 << len(ext)) - 1

    @functools.lru_cache(None)
    def go(covered):
        if covered == full:
            return 0.0
        free = ~covered & full
        i = (free & -free).bit_length() - 1
        return min(cand[c][2] + go(covered | masks[c]) for c in range(len(cand)) if masks[c] >> i & 1)

    return go(0)

