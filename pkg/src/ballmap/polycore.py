"""Sparse polynomial arithmetic with exact rational coefficients.

Every constructed map in the package is stored with :class:`fractions.Fraction`
coefficients.  Floats only appear when a map is sampled for verification.
Maps whose construction needs an irrational constant (a square root, a cosine)
store the binary64 value of that constant as an exact rational and carry a
``float_tagged`` flag so that callers know exact identities only hold up to
rounding of the constant.

A :class:`PolyMap` is kept as a chain of explicit stages rather than one
expanded tuple of polynomials.  Expanding ``f o g`` symbolically is always
possible (:meth:`PolyMap.expand`) but the recursive cube and hull maps reach
degrees in the hundreds, and evaluating an expanded high degree polynomial in
binary64 is numerically useless.  Evaluation therefore walks the stages.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import chebyshev as npcheb

__all__ = [
    "as_fraction",
    "frac_str",
    "UniPoly",
    "MultiPoly",
    "PolyMap",
    "compose",
    "derivative",
    "nth_derivative",
    "taylor_jet",
    "poly_eval",
]


def as_fraction(x) -> Fraction:
    """Convert ``x`` to an exact rational.

    Floats are converted exactly (their binary value), strings may be
    ``"p/q"`` or decimal literals.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        return Fraction(int(x))
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, (float, np.floating)):
        xf = float(x)
        if not math.isfinite(xf):
            raise ValueError(f"non-finite coefficient {x!r}")
        return Fraction(xf)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def frac_str(x: Fraction) -> str:
    """Canonical ``"p/q"`` string of a rational."""
    x = as_fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _is_exact_number(x) -> bool:
    return isinstance(x, (Fraction, int, np.integer)) and not isinstance(x, bool)


# ---------------------------------------------------------------------------
# univariate


class UniPoly:
    """Univariate polynomial with exact coefficients, ``coeffs[k]`` of ``t**k``.

    An optional Chebyshev form ``cheb = (coeffs, a, b)`` describes the same
    polynomial on ``[a, b]``; when present it is used for float evaluation
    because it stays well conditioned at high degree.
    """

    __slots__ = ("coeffs", "float_tagged", "cheb", "_fc")

    def __init__(self, coeffs: Iterable = (), float_tagged: bool = False, cheb=None):
        c = [as_fraction(v) for v in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.coeffs = tuple(c)
        self.float_tagged = bool(float_tagged)
        self.cheb = cheb
        self._fc = None

    # construction helpers
    @classmethod
    def constant(cls, c) -> "UniPoly":
        return cls([c])

    @classmethod
    def monomial(cls, k: int, c=1) -> "UniPoly":
        return cls([0] * k + [c])

    @classmethod
    def from_chebyshev(cls, coeffs: Sequence, domain=(-1, 1), float_tagged=False) -> "UniPoly":
        """Exact conversion of a Chebyshev series on ``domain`` to monomials."""
        a, b = (as_fraction(v) for v in domain)
        cc = tuple(as_fraction(v) for v in coeffs)
        # u = alpha*t + beta maps [a, b] onto [-1, 1]
        alpha = 2 / (b - a)
        beta = -(a + b) / (b - a)
        u = cls([beta, alpha])
        b1 = cls()
        b2 = cls()
        for k in range(len(cc) - 1, 0, -1):
            b1, b2 = u * b1 * 2 - b2 + cc[k], b1
        res = (u * b1 - b2 + cc[0]) if cc else cls()
        return cls(res.coeffs, float_tagged, cheb=(cc, a, b))

    def to_chebyshev(self, domain=(-1, 1)) -> tuple:
        """Exact Chebyshev coefficients on ``domain``."""
        a, b = (as_fraction(v) for v in domain)
        # t = (u - beta)/alpha
        half = (b - a) / 2
        mid = (a + b) / 2
        p_u = self.compose(UniPoly([mid, half]))
        # Horner in the Chebyshev basis: multiply by u then add constant
        out: list[Fraction] = []
        for c in reversed(p_u.coeffs):
            out = _cheb_mul_x(out)
            if out:
                out[0] += c
            else:
                out = [c]
        while out and out[-1] == 0:
            out.pop()
        return tuple(out)

    def with_chebyshev(self, domain=(-1, 1)) -> "UniPoly":
        """Same polynomial with a Chebyshev form attached for stable float evaluation."""
        a, b = (as_fraction(v) for v in domain)
        return UniPoly(self.coeffs, self.float_tagged, cheb=(self.to_chebyshev((a, b)), a, b))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, t):
        if _is_exact_number(t):
            t = as_fraction(t)
            acc = Fraction(0)
            for c in reversed(self.coeffs):
                acc = acc * t + c
            return acc
        return self.eval_float(t)

    def eval_float(self, t):
        t = np.asarray(t, dtype=float)
        if self.cheb is not None:
            cc, a, b = self.cheb
            if self._fc is None:
                self._fc = np.array([float(c) for c in cc]) if cc else np.zeros(1)
            u = (2.0 * t - float(a + b)) / float(b - a)
            return npcheb.chebval(u, self._fc)
        if self._fc is None:
            self._fc = np.array([float(c) for c in self.coeffs]) if self.coeffs else np.zeros(1)
        acc = np.zeros_like(t)
        for c in self._fc[::-1]:
            acc = acc * t + c
        return acc

    def derivative(self, k: int = 1) -> "UniPoly":
        if k < 0:
            raise ValueError("derivative order must be nonnegative")
        c = list(self.coeffs)
        for _ in range(k):
            c = [i * c[i] for i in range(1, len(c))]
        cheb = None
        if self.cheb is not None:
            cc, a, b = self.cheb
            cheb = (_cheb_der(cc, k, a, b), a, b)
        return UniPoly(c, self.float_tagged, cheb)

    def _binop_tag(self, other) -> bool:
        return self.float_tagged or getattr(other, "float_tagged", False)

    def __add__(self, other):
        if not isinstance(other, UniPoly):
            other = UniPoly([other])
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (n - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (n - len(other.coeffs))
        return UniPoly([x + y for x, y in zip(a, b)], self._binop_tag(other))

    __radd__ = __add__

    def __neg__(self):
        return UniPoly([-c for c in self.coeffs], self.float_tagged)

    def __sub__(self, other):
        if not isinstance(other, UniPoly):
            other = UniPoly([other])
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, UniPoly):
            s = as_fraction(other)
            return UniPoly([c * s for c in self.coeffs], self.float_tagged)
        if not self.coeffs or not other.coeffs:
            return UniPoly([], self._binop_tag(other))
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return UniPoly(out, self._binop_tag(other))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        res = UniPoly([1], self.float_tagged)
        base = self
        while k:
            if k & 1:
                res = res * base
            base = base * base
            k >>= 1
        return res

    def compose(self, inner: "UniPoly") -> "UniPoly":
        """``self(inner(t))`` by Horner's scheme."""
        acc = UniPoly([], self.float_tagged or inner.float_tagged)
        for c in reversed(self.coeffs):
            acc = acc * inner + c
        return acc

    def __eq__(self, other):
        if isinstance(other, UniPoly):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        if not self.coeffs:
            return "UniPoly(0)"
        parts = [f"{c}*t^{k}" for k, c in enumerate(self.coeffs) if c != 0]
        return "UniPoly(" + " + ".join(parts) + ")"

    def taylor_jet(self, t0, order: int) -> list:
        out = []
        p = self
        for _ in range(order + 1):
            out.append(p(t0))
            p = p.derivative()
        return out

    def to_json(self) -> dict:
        d = {"coeffs": [frac_str(c) for c in self.coeffs], "float_tagged": self.float_tagged}
        if self.cheb is not None:
            cc, a, b = self.cheb
            d["cheb"] = {"domain": [frac_str(a), frac_str(b)], "coeffs": [frac_str(c) for c in cc]}
        return d

    @classmethod
    def from_json(cls, d: dict) -> "UniPoly":
        cheb = None
        if "cheb" in d:
            a, b = (as_fraction(v) for v in d["cheb"]["domain"])
            cheb = (tuple(as_fraction(c) for c in d["cheb"]["coeffs"]), a, b)
        return cls(d["coeffs"], d.get("float_tagged", False), cheb)


def _cheb_mul_x(c: list) -> list:
    """Multiply a Chebyshev series by ``u``: u*T_j = (T_{j+1} + T_{|j-1|})/2."""
    if not c:
        return []
    out = [Fraction(0)] * (len(c) + 1)
    for j, v in enumerate(c):
        if v == 0:
            continue
        if j == 0:
            out[1] += v
        else:
            out[j + 1] += v / 2
            out[j - 1] += v / 2
    return out


def _cheb_der(cc: tuple, k: int, a: Fraction, b: Fraction) -> tuple:
    """Exact ``k``-th derivative of a Chebyshev series on ``[a, b]``."""
    c = list(cc)
    scale = 2 / (b - a)
    for _ in range(k):
        n = len(c)
        if n <= 1:
            c = []
            break
        d = [Fraction(0)] * (n + 1)
        for j in range(n - 1, 0, -1):
            d[j - 1] = d[j + 1] + 2 * j * c[j]
        d[0] /= 2
        c = [v * scale for v in d[: n - 1]]
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


# ---------------------------------------------------------------------------
# multivariate


def _zero_exp(n: int) -> tuple:
    return (0,) * n


class MultiPoly:
    """Sparse multivariate polynomial ``{exponent tuple: Fraction}``.

    ``uni`` optionally records that the polynomial is a univariate
    :class:`UniPoly` in variable ``uni[0]``; float evaluation then uses the
    univariate (possibly Chebyshev) evaluator.
    """

    __slots__ = ("nvars", "terms", "float_tagged", "uni", "_htree")

    def __init__(self, nvars: int, terms=None, float_tagged: bool = False, uni=None):
        self.nvars = int(nvars)
        clean = {}
        if terms:
            items = terms.items() if isinstance(terms, dict) else terms
            for e, c in items:
                e = tuple(int(v) for v in e)
                if len(e) != self.nvars:
                    raise ValueError(f"exponent {e} does not have length {self.nvars}")
                if any(v < 0 for v in e):
                    raise ValueError("negative exponent")
                c = as_fraction(c)
                if c != 0:
                    clean[e] = clean.get(e, Fraction(0)) + c
                    if clean[e] == 0:
                        del clean[e]
        self.terms = clean
        self.float_tagged = bool(float_tagged)
        self.uni = uni
        self._htree = None

    # -- constructors
    @classmethod
    def constant(cls, c, nvars: int, float_tagged=False) -> "MultiPoly":
        return cls(nvars, {_zero_exp(nvars): c}, float_tagged)

    @classmethod
    def variable(cls, i: int, nvars: int) -> "MultiPoly":
        if not 0 <= i < nvars:
            raise ValueError("variable index out of range")
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): 1})

    @classmethod
    def from_unipoly(cls, u: UniPoly, var: int, nvars: int) -> "MultiPoly":
        terms = {}
        for k, c in enumerate(u.coeffs):
            if c != 0:
                e = [0] * nvars
                e[var] = k
                terms[tuple(e)] = c
        return cls(nvars, terms, u.float_tagged, uni=(var, u))

    def as_unipoly(self, var: int | None = None) -> UniPoly:
        """Return the univariate polynomial if only one variable occurs."""
        if self.uni is not None and (var is None or var == self.uni[0]):
            return self.uni[1]
        used = {i for e in self.terms for i, v in enumerate(e) if v}
        if var is None:
            if len(used) > 1:
                raise ValueError("polynomial is not univariate")
            var = used.pop() if used else 0
        elif used - {var}:
            raise ValueError("polynomial depends on other variables")
        deg = max((e[var] for e in self.terms), default=-1)
        c = [Fraction(0)] * (deg + 1)
        for e, v in self.terms.items():
            c[e[var]] = v
        return UniPoly(c, self.float_tagged)

    # -- queries
    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self.terms)

    def coefficient(self, exp) -> Fraction:
        return self.terms.get(tuple(exp), Fraction(0))

    def constant_term(self) -> Fraction:
        return self.terms.get(_zero_exp(self.nvars), Fraction(0))

    def variables(self) -> set:
        return {i for e in self.terms for i, v in enumerate(e) if v}

    # -- evaluation
    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        """Exact value at a point with rational coordinates.

        Float coordinates are converted exactly, so the result is the exact
        value of the polynomial at the given binary64 point.
        """
        if len(x) != self.nvars:
            raise ValueError(f"point has length {len(x)}, polynomial has {self.nvars} variables")
        xs = [as_fraction(v) for v in x]
        cache: dict = {}
        total = Fraction(0)
        for e, c in self.terms.items():
            term = c
            for i, k in enumerate(e):
                if k:
                    key = (i, k)
                    p = cache.get(key)
                    if p is None:
                        p = xs[i] ** k
                        cache[key] = p
                    term *= p
            total += term
        return total

    def _tree(self):
        if self._htree is None:
            self._htree = _build_horner(
                [(e, float(c)) for e, c in self.terms.items()], 0, self.nvars
            )
        return self._htree

    def eval_float(self, X):
        """Vectorised binary64 evaluation, nested Horner over the variables.

        ``X`` has shape ``(N, nvars)`` (or ``(nvars,)`` for a single point).
        """
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.shape[1] != self.nvars:
            raise ValueError(f"points have {X.shape[1]} coordinates, polynomial has {self.nvars} variables")
        if self.uni is not None:
            out = self.uni[1].eval_float(X[:, self.uni[0]])
        elif not self.terms:
            out = np.zeros(X.shape[0])
        else:
            out = _eval_horner(self._tree(), X, 0, {})
            out = np.broadcast_to(out, (X.shape[0],)).astype(float, copy=True)
        return float(out[0]) if single else out

    # -- arithmetic
    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        return MultiPoly.constant(other, self.nvars)

    def __add__(self, other):
        o = self._coerce(other)
        t = dict(self.terms)
        for e, c in o.terms.items():
            v = t.get(e, Fraction(0)) + c
            if v == 0:
                t.pop(e, None)
            else:
                t[e] = v
        return MultiPoly(self.nvars, t, self.float_tagged or o.float_tagged)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.nvars, {e: -c for e, c in self.terms.items()}, self.float_tagged)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            s = as_fraction(other)
            if s == 0:
                return MultiPoly(self.nvars, {}, self.float_tagged)
            return MultiPoly(self.nvars, {e: c * s for e, c in self.terms.items()}, self.float_tagged)
        o = self._coerce(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in o.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return MultiPoly(self.nvars, out, self.float_tagged or o.float_tagged)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * (1 / as_fraction(other))

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        res = MultiPoly.constant(1, self.nvars, self.float_tagged)
        base = self
        while k:
            if k & 1:
                res = res * base
            k >>= 1
            if k:
                base = base * base
        return res

    def __eq__(self, other):
        if isinstance(other, MultiPoly):
            return self.nvars == other.nvars and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == MultiPoly.constant(other, self.nvars).terms
        return NotImplemented

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __repr__(self):
        if not self.terms:
            return f"MultiPoly({self.nvars}, 0)"
        parts = []
        for e, c in sorted(self.terms.items(), reverse=True):
            mon = "*".join(f"x{i + 1}^{k}" if k > 1 else f"x{i + 1}" for i, k in enumerate(e) if k)
            parts.append(f"{c}" + (f"*{mon}" if mon else ""))
        return f"MultiPoly({self.nvars}, " + " + ".join(parts) + ")"

    # -- calculus and substitution
    def derivative(self, var: int) -> "MultiPoly":
        if not 0 <= var < self.nvars:
            raise ValueError("variable index out of range")
        out = {}
        for e, c in self.terms.items():
            k = e[var]
            if k:
                ne = list(e)
                ne[var] = k - 1
                out[tuple(ne)] = c * k
        return MultiPoly(self.nvars, out, self.float_tagged)

    def compose(self, subs: Sequence["MultiPoly"]) -> "MultiPoly":
        """Substitute ``x_i -> subs[i]``; all substitutes share one variable count."""
        if len(subs) != self.nvars:
            raise ValueError(f"need {self.nvars} substitutes, got {len(subs)}")
        if not subs:
            return MultiPoly(0, self.terms, self.float_tagged)
        nv = subs[0].nvars
        if any(s.nvars != nv for s in subs):
            raise ValueError("substitutes disagree on variable count")
        tag = self.float_tagged or any(s.float_tagged for s in subs)
        powers: dict = {}

        def power(i, k):
            key = (i, k)
            p = powers.get(key)
            if p is None:
                if k == 1:
                    p = subs[i]
                else:
                    h = k // 2
                    p = power(i, h) * power(i, k - h)
                powers[key] = p
            return p

        acc: dict = {}
        for e, c in self.terms.items():
            term = None
            for i, k in enumerate(e):
                if k:
                    term = power(i, k) if term is None else term * power(i, k)
            if term is None:
                z = _zero_exp(nv)
                acc[z] = acc.get(z, Fraction(0)) + c
            else:
                for te, tc in term.terms.items():
                    acc[te] = acc.get(te, Fraction(0)) + c * tc
        return MultiPoly(nv, acc, tag)

    def embed(self, nvars: int, positions: Sequence[int]) -> "MultiPoly":
        """Rename variable ``i`` to ``positions[i]`` in a ring with ``nvars`` variables."""
        out = {}
        for e, c in self.terms.items():
            ne = [0] * nvars
            for i, k in enumerate(e):
                ne[positions[i]] += k
            ne = tuple(ne)
            out[ne] = out.get(ne, Fraction(0)) + c
        uni = None
        if self.uni is not None:
            uni = (positions[self.uni[0]], self.uni[1])
        return MultiPoly(nvars, out, self.float_tagged, uni)

    # -- serialisation
    def to_json(self) -> dict:
        d = {
            "nvars": self.nvars,
            "terms": [[list(e), frac_str(c)] for e, c in sorted(self.terms.items(), reverse=True)],
            "float_tagged": self.float_tagged,
        }
        if self.uni is not None:
            d["univariate"] = {"var": self.uni[0], "poly": self.uni[1].to_json()}
        return d

    @classmethod
    def from_json(cls, d: dict) -> "MultiPoly":
        uni = None
        if "univariate" in d:
            uni = (int(d["univariate"]["var"]), UniPoly.from_json(d["univariate"]["poly"]))
        return cls(d["nvars"], [(tuple(e), c) for e, c in d["terms"]], d.get("float_tagged", False), uni)


def _build_horner(terms, var, nvars):
    """Group terms by the power of ``var`` for nested Horner evaluation."""
    if var == nvars:
        return sum(c for _, c in terms)
    groups: dict = {}
    for e, c in terms:
        groups.setdefault(e[var], []).append((e, c))
    return [(k, _build_horner(groups[k], var + 1, nvars)) for k in sorted(groups, reverse=True)]


def _eval_horner(tree, X, var, pw):
    if not isinstance(tree, list):
        return tree
    x = X[:, var]

    def xp(k):
        if k == 0:
            return 1.0
        key = (var, k)
        v = pw.get(key)
        if v is None:
            v = x ** k
            pw[key] = v
        return v

    acc = None
    prev = None
    for k, sub in tree:
        val = _eval_horner(sub, X, var + 1, pw)
        if acc is None:
            acc = val
        else:
            acc = acc * xp(prev - k) + val
        prev = k
    return acc * xp(prev)


# ---------------------------------------------------------------------------
# maps


class PolyMap:
    """Polynomial map ``R^n_in -> R^n_out`` stored as a chain of explicit stages.

    ``stages[0]`` is applied first.  Each stage is a tuple of
    :class:`MultiPoly` sharing one variable count.
    """

    __slots__ = ("stages", "n_in", "n_out", "trace", "_cache")

    def __init__(self, components: Sequence[MultiPoly], n_in: int | None = None, trace: str = ""):
        comps = tuple(components)
        if n_in is None:
            if not comps:
                raise ValueError("cannot infer source dimension of an empty map")
            n_in = comps[0].nvars
        if any(c.nvars != n_in for c in comps):
            raise ValueError("all components must share the source dimension")
        self.stages = (comps,)
        self.n_in = int(n_in)
        self.n_out = len(comps)
        self.trace = trace
        self._cache = {}

    @classmethod
    def chain(cls, stages: Sequence[Sequence[MultiPoly]], trace: str = "") -> "PolyMap":
        stages = [tuple(s) for s in stages]
        if not stages:
            raise ValueError("empty chain")
        first = cls(stages[0], trace=trace)
        dim = first.n_out
        for s in stages[1:]:
            if any(c.nvars != dim for c in s):
                raise ValueError("stage dimensions do not chain")
            dim = len(s)
        first.stages = tuple(stages)
        first.n_out = dim
        return first

    # -- standard maps
    @classmethod
    def identity(cls, n: int) -> "PolyMap":
        return cls([MultiPoly.variable(i, n) for i in range(n)], n, trace=f"id{n}")

    @classmethod
    def affine(cls, A, b, trace: str = "affine") -> "PolyMap":
        A = [[as_fraction(v) for v in row] for row in A]
        b = [as_fraction(v) for v in b]
        n_in = len(A[0]) if A else 0
        comps = []
        for row, bi in zip(A, b):
            terms = {_zero_exp(n_in): bi}
            for j, a in enumerate(row):
                if a != 0:
                    e = [0] * n_in
                    e[j] = 1
                    terms[tuple(e)] = a
            comps.append(MultiPoly(n_in, terms))
        return cls(comps, n_in, trace=trace)

    @classmethod
    def constant(cls, values, n_in: int) -> "PolyMap":
        return cls([MultiPoly.constant(v, n_in) for v in values], n_in, trace="const")

    # -- properties
    @property
    def float_tagged(self) -> bool:
        return any(c.float_tagged for s in self.stages for c in s)

    @property
    def is_explicit(self) -> bool:
        return len(self.stages) == 1

    @property
    def components(self) -> tuple:
        """Expanded components (computed once and cached)."""
        if "expanded" not in self._cache:
            comps = self.stages[0]
            for s in self.stages[1:]:
                comps = tuple(c.compose(comps) for c in s)
            self._cache["expanded"] = comps
        return self._cache["expanded"]

    def expand(self) -> "PolyMap":
        return PolyMap(self.components, self.n_in, self.trace)

    @property
    def nvars(self) -> int:
        return self.n_in

    def degree_bound(self) -> int:
        d = 1
        for s in self.stages:
            d *= max(1, max((c.degree for c in s), default=0))
        return d

    def degree(self) -> int:
        return max((c.degree for c in self.components), default=-1)

    # -- evaluation
    def __call__(self, x):
        """Exact evaluation at a rational point, stage by stage."""
        if len(x) != self.n_in:
            raise ValueError(f"point has length {len(x)}, map expects {self.n_in}")
        vals = tuple(as_fraction(v) for v in x)
        for s in self.stages:
            vals = tuple(c.eval(vals) for c in s)
        return vals

    def eval_float(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.shape[1] != self.n_in:
            raise ValueError(f"points have {X.shape[1]} coordinates, map expects {self.n_in}")
        cur = X
        for s in self.stages:
            cur = np.column_stack([c.eval_float(cur) for c in s]) if s else np.zeros((cur.shape[0], 0))
        return cur[0] if single else cur

    # -- algebra
    def compose(self, inner: "PolyMap") -> "PolyMap":
        """``self o inner`` (lazy; the chain is concatenated)."""
        if inner.n_out != self.n_in:
            raise ValueError(f"cannot compose: inner has {inner.n_out} outputs, outer expects {self.n_in}")
        trace = f"{self.trace} o {inner.trace}" if self.trace and inner.trace else (self.trace or inner.trace)
        return PolyMap.chain(inner.stages + self.stages, trace=trace)

    def __matmul__(self, inner: "PolyMap") -> "PolyMap":
        return self.compose(inner)

    def component_map(self, idx: Sequence[int]) -> "PolyMap":
        """Select output components."""
        last = self.stages[-1]
        st = self.stages[:-1] + (tuple(last[i] for i in idx),)
        return PolyMap.chain(st, trace=self.trace)

    def jacobian(self) -> list:
        return [[c.derivative(j) for j in range(self.n_in)] for c in self.components]

    def unipolys(self) -> list:
        """Components of a one-variable map as :class:`UniPoly` (expanding if needed)."""
        if self.n_in != 1:
            raise ValueError("map is not a path")
        if self.is_explicit:
            return [c.as_unipoly(0) for c in self.stages[0]]
        return [c.as_unipoly(0) for c in self.components]

    def __eq__(self, other):
        if not isinstance(other, PolyMap):
            return NotImplemented
        return self.n_in == other.n_in and self.components == other.components

    def __hash__(self):
        return hash((self.n_in, self.n_out))

    def __repr__(self):
        return f"PolyMap(R^{self.n_in} -> R^{self.n_out}, stages={len(self.stages)}, trace={self.trace!r})"

    # -- serialisation
    def to_json(self) -> dict:
        return {
            "n_in": self.n_in,
            "n_out": self.n_out,
            "trace": self.trace,
            "float_tagged": self.float_tagged,
            "stages": [[c.to_json() for c in s] for s in self.stages],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, d: dict) -> "PolyMap":
        stages = [[MultiPoly.from_json(c) for c in s] for s in d["stages"]]
        m = cls.chain(stages, trace=d.get("trace", ""))
        if m.n_in != d.get("n_in", m.n_in):
            raise ValueError("declared source dimension does not match stages")
        return m

    @classmethod
    def loads(cls, s: str) -> "PolyMap":
        return cls.from_json(json.loads(s))


# ---------------------------------------------------------------------------
# functional API


def poly_eval(p: MultiPoly, x):
    """Exact value of ``p`` at ``x``."""
    return p.eval(x)


def compose(f: PolyMap, g: PolyMap, expand: bool = False) -> PolyMap:
    """``f o g``.  With ``expand=True`` the result is a single explicit stage."""
    h = f.compose(g)
    return h.expand() if expand else h


def derivative(p: MultiPoly, var: int) -> MultiPoly:
    return p.derivative(var)


def nth_derivative(u: UniPoly, k: int) -> UniPoly:
    return u.derivative(k)


def taylor_jet(path, t0, order: int) -> list:
    """Exact jet ``(u(t0), u'(t0), ..., u^(k)(t0))`` of a vector of univariate polynomials.

    ``path`` is a sequence of :class:`UniPoly` or a one-variable :class:`PolyMap`.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    polys = path.unipolys() if isinstance(path, PolyMap) else list(path)
    jets = [u.taylor_jet(as_fraction(t0), order) for u in polys]
    return [tuple(j[k] for j in jets) for k in range(order + 1)]
