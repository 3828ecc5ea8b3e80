"""Independent brute-force reference for the test suite.

Everything here is written from the definitions alone, in plain Python
sets and Fractions, with no imports from the package under test. It is
deliberately naive: correctness by transparency, not speed. Tests
compare package output against these functions and against values
frozen from their output.
"""

from fractions import Fraction


def ref_intervals(n):
    """All 1D cell intervals [a, a+length) on a grid of n cells."""
    out = []
    for length in range(1, n + 1):
        for a in range(0, n - length + 1):
            out.append(range(a, a + length))
    return out


def ref_rects(nx, ny):
    """All axis-aligned cell rectangles on an nx-by-ny grid, as cell sets.

    Cell (x, y) gets the row-major index x * ny + y (last axis fastest).
    """
    out = []
    for w in range(1, nx + 1):
        for h in range(1, ny + 1):
            for x in range(0, nx - w + 1):
                for y in range(0, ny - h + 1):
                    out.append(
                        frozenset(
                            cx * ny + cy
                            for cx in range(x, x + w)
                            for cy in range(y, y + h)
                        )
                    )
    return out


def ref_maximal_values(n, e_set):
    """Per-cell maximal average of the indicator of e_set over intervals."""
    e_set = set(e_set)
    values = []
    for cell in range(n):
        best = Fraction(0)
        for iv in ref_intervals(n):
            if cell in iv:
                avg = Fraction(sum(1 for c in iv if c in e_set), len(iv))
                if avg > best:
                    best = avg
        values.append(best)
    return values


def ref_maximal_values_rects(nx, ny, e_set):
    """2D analogue of ref_maximal_values over all axis rectangles."""
    e_set = set(e_set)
    rects = ref_rects(nx, ny)
    values = []
    for cell in range(nx * ny):
        best = Fraction(0)
        for rect in rects:
            if cell in rect:
                avg = Fraction(len(rect & e_set), len(rect))
                if avg > best:
                    best = avg
        values.append(best)
    return values


def ref_superlevel(n, e_set, level, strict):
    """Cells whose maximal average passes the level."""
    level = Fraction(level)
    values = ref_maximal_values(n, e_set)
    if strict:
        return {c for c in range(n) if values[c] > level}
    return {c for c in range(n) if values[c] >= level}


def ref_halo_ratio(n, e_set, u):
    """|{maximal average > 1/u}| / |E| in cells, exact."""
    u = Fraction(u)
    e_set = set(e_set)
    covered = ref_superlevel(n, e_set, Fraction(1) / u, strict=True)
    return Fraction(len(covered), len(e_set))


def ref_best_subset(n, u):
    """Maximize ref_halo_ratio over every nonempty subset of n cells.

    Returns (ratio, subset). Ties go to the subset with the smallest
    integer mask, masks enumerated in ascending order.
    """
    u = Fraction(u)
    best_ratio = None
    best_mask = None
    for mask in range(1, 1 << n):
        e_set = {c for c in range(n) if mask >> c & 1}
        ratio = ref_halo_ratio(n, e_set, u)
        if best_ratio is None or ratio > best_ratio:
            best_ratio = ratio
            best_mask = mask
    return best_ratio, {c for c in range(n) if best_mask >> c & 1}


def ref_orbit_step(n, cells, gamma):
    """One non-strict superlevel step at gamma, over intervals."""
    return ref_superlevel(n, cells, gamma, strict=False)
