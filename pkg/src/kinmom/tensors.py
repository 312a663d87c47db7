"""Exact checks of the Levi-Civita / Kronecker-delta contraction identities
that drive the kinetic angular-momentum commutator algebra.

All arithmetic here is integer or rational, so every reported failure is a
genuine counterexample and never a rounding artifact.  Grid-based residual
checks live elsewhere; this module is purely combinatorial.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

INDICES = (1, 2, 3)

# (i, j, k, sign) for the six nonzero entries of the alternating symbol
_EPS_NONZERO = (
    (1, 2, 3, 1), (2, 3, 1, 1), (3, 1, 2, 1),
    (1, 3, 2, -1), (3, 2, 1, -1), (2, 1, 3, -1),
)


class Index3(int):
    """1-based spatial index; anything outside {1, 2, 3} is rejected."""

    def __new__(cls, value):
        if not isinstance(value, int) or isinstance(value, bool) or value not in INDICES:
            raise ValueError(f"spatial index must be 1, 2 or 3, got {value!r}")
        return super().__new__(cls, value)


def levi_civita(i, j, k):
    """Signature of the permutation (i, j, k): +1 even, -1 odd, 0 on repeats."""
    i, j, k = Index3(i), Index3(j), Index3(k)
    return (i - j) * (j - k) * (k - i) // 2


def kron_delta(i, j):
    return 1 if Index3(i) == Index3(j) else 0


# _COMPLETE[p][q] -> (r, levi_civita(p, r, q)) with r the index missing from
# {p, q}, or None when p == q.  Lets contractions skip vanishing terms.
_COMPLETE = {
    p: {q: None if p == q else ((6 - p - q), levi_civita(p, 6 - p - q, q))
        for q in INDICES}
    for p in INDICES
}

# _PAIRS[i] -> ((j, k, sign), ...) with levi_civita(i, j, k) = sign != 0
_PAIRS = {
    i: tuple((b, c, s) for (a, b, c, s) in _EPS_NONZERO if a == i)
    for i in INDICES
}


def nonzero_eps_pairs(i):
    """Pairs (j, k, sign) with levi_civita(i, j, k) = sign nonzero."""
    return _PAIRS[Index3(i)]


@dataclass
class IdentityReport:
    """Result of exhaustively enumerating one contraction identity."""

    name: str
    cases_checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures

    def merge(self, other):
        self.cases_checked += other.cases_checked
        self.failures.extend(other.failures)
        return self

    def as_dict(self):
        return {
            "name": self.name,
            "cases_checked": self.cases_checked,
            "failures": [
                {"indices": list(idx), "lhs": str(lhs), "rhs": str(rhs)}
                for idx, lhs, rhs in self.failures
            ],
            "passed": self.passed,
        }


def _as_vec3(v):
    v = tuple(v)
    if len(v) != 3:
        raise ValueError(f"expected a 3-vector, got {len(v)} components")
    return tuple(Fraction(c) for c in v)


def verify_delta_contraction():
    """Check the double-epsilon / delta contraction chain over all 81 tuples.

    For every (i, j, a, d) the three expressions

        sum_b (eps_iab eps_jbd - eps_jab eps_ibd)
        delta_id delta_ja - delta_ia delta_jd
        -sum_k eps_ijk eps_kad

    must agree exactly; both equalities of the chain are tested separately.
    """
    report = IdentityReport("delta-contraction")
    for i, j, a, d in product(INDICES, repeat=4):
        lhs = sum(levi_civita(i, a, b) * levi_civita(j, b, d)
                  - levi_civita(j, a, b) * levi_civita(i, b, d)
                  for b in INDICES)
        mid = kron_delta(i, d) * kron_delta(j, a) - kron_delta(i, a) * kron_delta(j, d)
        rhs = -sum(levi_civita(i, j, k) * levi_civita(k, a, d) for k in INDICES)
        report.cases_checked += 1
        if lhs != mid:
            report.failures.append(((i, j, a, d), lhs, mid))
        if mid != rhs:
            report.failures.append(((i, j, a, d), mid, rhs))
    return report


def _quad_sum(variant, i, j, x, H):
    """Exact value of one triple-epsilon moment contraction.

    variant selects the arrangement of the two inner epsilon factors; the
    outer sum always runs over the nonzero entries of eps_bde.
    """
    total = Fraction(0)
    for b, d, e, s_bde in _EPS_NONZERO:
        if variant == 1:       # eps_iab eps_jcd
            fa, fc = _COMPLETE[i][b], _COMPLETE[j][d]
        elif variant == 2:     # eps_icb eps_jad
            fc, fa = _COMPLETE[i][b], _COMPLETE[j][d]
        elif variant == 3:     # eps_jab eps_icd
            fa, fc = _COMPLETE[j][b], _COMPLETE[i][d]
        else:                  # eps_jcb eps_iad
            fc, fa = _COMPLETE[j][b], _COMPLETE[i][d]
        if fa is None or fc is None:
            continue
        a, sa = fa
        c, sc = fc
        total += s_bde * sa * sc * x[a - 1] * x[c - 1] * H[e - 1]
    return total


def verify_quadruple_contractions(x, H):
    """Check the four triple-epsilon moment identities for exact x, H.

    Each contraction reduces to +-(x.H) eps_ijk x_k (signs +, +, -, -), and
    their quarter combination with those signs reduces to the same value with
    coefficient one.  All 9 (i, j) pairs are enumerated for each form.
    """
    x = _as_vec3(x)
    H = _as_vec3(H)
    xdotH = sum(x[a] * H[a] for a in range(3))
    report = IdentityReport("quadruple-contraction")
    signs = {1: 1, 2: 1, 3: -1, 4: -1}
    for i, j in product(INDICES, repeat=2):
        target = xdotH * sum(levi_civita(i, j, k) * x[k - 1] for k in INDICES)
        values = {}
        for variant in (1, 2, 3, 4):
            values[variant] = _quad_sum(variant, i, j, x, H)
            report.cases_checked += 1
            if values[variant] != signs[variant] * target:
                report.failures.append(
                    ((i, j, variant), values[variant], signs[variant] * target))
        combined = (values[1] + values[2] - values[3] - values[4]) / 4
        report.cases_checked += 1
        if combined != target:
            report.failures.append(((i, j, "combined"), combined, target))
    return report


def _grad_as_matrix(gradA):
    rows = tuple(tuple(Fraction(v) for v in row) for row in gradA)
    if len(rows) != 3 or any(len(r) != 3 for r in rows):
        raise ValueError("gradA must be a 3x3 matrix of rationals")
    return rows


def verify_field_contraction(x, gradA):
    """Check each rewriting step of the moment/field-gradient contraction.

    gradA[b][d] holds d_b A_d (0-based storage, 1-based index convention).
    The chain starts from

        E0 = (eps_iab eps_jcd - eps_jab eps_icd) x_a x_c d_b A_d

    and is rewritten by (a) symmetrising the paired index groups, (b)
    replacing d_b A_d with its antisymmetric part, (c) substituting the
    magnetic field H_e = eps_ebd d_b A_d, until it reads (x.H) eps_ijk x_k,
    the correction term of the kinetic angular-momentum commutator.
    """
    x = _as_vec3(x)
    G = _grad_as_matrix(gradA)
    H = [sum(s * G[b - 1][d - 1] for (b, d, s) in _PAIRS[e]) for e in INDICES]
    xdotH = sum(x[a] * H[a] for a in range(3))

    def pairsum(first, second):
        # sum over eps_{first,a,b} eps_{second,c,d} x_a x_c W[b][d]
        return lambda W: sum(
            s1 * s2 * x[a - 1] * x[c - 1] * W[b - 1][d - 1]
            for (a, b, s1) in _PAIRS[first] for (c, d, s2) in _PAIRS[second])

    def crosssum(first, second):
        # sum over eps_{first,c,b} eps_{second,a,d} x_a x_c W[b][d]
        return lambda W: sum(
            s1 * s2 * x[a - 1] * x[c - 1] * W[b - 1][d - 1]
            for (c, b, s1) in _PAIRS[first] for (a, d, s2) in _PAIRS[second])

    Ganti = tuple(tuple(G[b][d] - G[d][b] for d in range(3)) for b in range(3))
    # eps_bde H_e as a matrix in (b, d)
    GepsH = tuple(
        tuple(sum(levi_civita(b + 1, d + 1, e) * H[e - 1] for e in INDICES)
              for d in range(3))
        for b in range(3))

    report = IdentityReport("field-gradient-contraction")
    for i, j in product(INDICES, repeat=2):
        t1, t2 = pairsum(i, j), crosssum(i, j)
        t3, t4 = pairsum(j, i), crosssum(j, i)
        e0 = t1(G) - t3(G)
        e1 = (t1(G) + t2(G) - t3(G) - t4(G)) / 2
        e2 = (t1(Ganti) + t2(Ganti) - t3(Ganti) - t4(Ganti)) / 4
        e3 = (t1(GepsH) + t2(GepsH) - t3(GepsH) - t4(GepsH)) / 4
        target = xdotH * sum(levi_civita(i, j, k) * x[k - 1] for k in INDICES)
        report.cases_checked += 1
        for step, lhs, rhs in (("symmetrize", e0, e1),
                               ("antisymmetrize", e1, e2),
                               ("field-substitute", e2, e3),
                               ("reduce", e3, target)):
            if lhs != rhs:
                report.failures.append(((i, j, step), lhs, rhs))
    return report


def random_int_vec3(rng, lo=-9, hi=9):
    return tuple(rng.randint(lo, hi) for _ in range(3))


def random_rational_matrix(rng, lo=-9, hi=9, max_den=9):
    return tuple(
        tuple(Fraction(rng.randint(lo, hi), rng.randint(1, max_den))
              for _ in range(3))
        for _ in range(3))


def run_full_suite(samples=100, seed=0):
    """Run every identity check: the 81-tuple delta chain plus `samples`
    seeded random inputs for the moment and field-gradient contractions.

    Returns one IdentityReport per identity family.
    """
    rng = random.Random(seed)
    reports = [verify_delta_contraction()]

    quad = IdentityReport("quadruple-contraction")
    for _ in range(samples):
        quad.merge(verify_quadruple_contractions(
            random_int_vec3(rng), random_int_vec3(rng)))
    # degenerate slices: zero, parallel and orthogonal vectors
    for x, H in (((0, 0, 0), (0, 0, 0)),
                 ((1, 2, 3), (2, 4, 6)),
                 ((1, 0, 0), (0, 5, 0))):
        quad.merge(verify_quadruple_contractions(x, H))
    reports.append(quad)

    grad = IdentityReport("field-gradient-contraction")
    for _ in range(samples):
        grad.merge(verify_field_contraction(
            random_int_vec3(rng), random_rational_matrix(rng)))
    reports.append(grad)
    return reports
