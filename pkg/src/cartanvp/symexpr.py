"""Exact symbolic scalar arithmetic.

Expressions are immutable trees over rational constants, named variables,
the four field operations, integer powers, and function atoms.  The known
unary functions sin, cos, exp, ln carry differentiation rules; any other
function name is an opaque atom (used for generic coefficient functions
such as B11(x1, x2, z1)) whose derivatives are fresh opaque atoms.

Canonicalization flattens an expression to a quotient of multivariate
polynomials over the rationals, with function atoms treated as opaque
generators.  The quotient is reduced by monomial content only and the
denominator is normalized to leading coefficient one, so canonical forms
are unique up to the (unimplemented) full polynomial gcd.  All coefficient
arithmetic is exact `fractions.Fraction`; floats appear only in
evaluation and sampling.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Union

from .errors import (
    DivisionByZeroError,
    ParseError,
    UnboundFunctionError,
    UnboundVariableError,
)

__all__ = [
    "Expr",
    "num",
    "var",
    "variables",
    "sin",
    "cos",
    "exp",
    "ln",
    "func",
    "canon",
    "diff",
    "evaluate",
    "subst",
    "free_vars",
    "opaque_atoms",
    "is_zero",
    "ZeroTest",
    "parse",
    "DEFAULT_SEED",
    "DEFAULT_BOX",
    "ZERO_THRESHOLD",
    "EVAL_DIV_TOLERANCE",
]

DEFAULT_SEED = 0xC4A7
DEFAULT_BOX = (-1.0, 1.0)
ZERO_THRESHOLD = 1e-9
EVAL_DIV_TOLERANCE = 1e-12
SAMPLE_BUDGET = 64

KNOWN_FUNCS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "ln": math.log,
}

NumberLike = Union[int, Fraction, "Expr"]


# ---------------------------------------------------------------------------
# expression trees


class Expr:
    """Immutable scalar expression tree.

    `op` is one of: const, var, add, mul, pow, div, func.  Use the module
    constructors (`num`, `var`, `sin`, ..., `func`) and the overloaded
    operators; do not build nodes by hand.
    """

    __slots__ = ("op", "args", "_key", "_canon")

    def __init__(self, op: str, args: tuple):
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "_key", None)
        object.__setattr__(self, "_canon", None)

    def __setattr__(self, name, value):
        raise AttributeError("Expr is immutable")

    # -- structural identity ------------------------------------------------

    def key(self) -> tuple:
        """Hashable, totally ordered structural encoding of the tree."""
        k = self._key
        if k is None:
            op = self.op
            if op == "const":
                c = self.args[0]
                k = ("c", (c.numerator, c.denominator))
            elif op == "var":
                k = ("v", self.args[0])
            elif op == "func":
                k = ("f", self.args[0], tuple(a.key() for a in self.args[1:]))
            elif op == "pow":
                k = ("p", self.args[0].key(), self.args[1])
            else:
                tag = {"add": "a", "mul": "m", "div": "d"}[op]
                k = (tag, tuple(a.key() for a in self.args))
            object.__setattr__(self, "_key", k)
        return k

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    # -- arithmetic sugar ---------------------------------------------------

    def __add__(self, other):
        return _add2(self, _coerce(other))

    def __radd__(self, other):
        return _add2(_coerce(other), self)

    def __sub__(self, other):
        return _add2(self, _neg(_coerce(other)))

    def __rsub__(self, other):
        return _add2(_coerce(other), _neg(self))

    def __mul__(self, other):
        return _mul2(self, _coerce(other))

    def __rmul__(self, other):
        return _mul2(_coerce(other), self)

    def __truediv__(self, other):
        return Expr("div", (self, _coerce(other)))

    def __rtruediv__(self, other):
        return Expr("div", (_coerce(other), self))

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("only integer powers are supported")
        return Expr("pow", (self, n))

    def __neg__(self):
        return _neg(self)

    def __pos__(self):
        return self

    # -- conveniences -------------------------------------------------------

    def canon(self, pythagorean: bool = False) -> "Expr":
        return canon(self, pythagorean=pythagorean)

    def diff(self, v) -> "Expr":
        return diff(self, v)

    def is_const_zero(self) -> bool:
        return self.op == "const" and self.args[0] == 0

    def const_value(self) -> Optional[Fraction]:
        """Fraction value if the canonical form is a constant, else None."""
        c = canon(self)
        if c.op == "const":
            return c.args[0]
        return None

    def __str__(self):
        return _format(self, 0)

    def __repr__(self):
        return f"Expr({_format(self, 0)!r})"


def _coerce(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Expr("const", (Fraction(x),))
    raise TypeError(f"cannot coerce {type(x).__name__} to Expr")


def _neg(e: Expr) -> Expr:
    return _mul2(_coerce(-1), e)


def _add2(a: Expr, b: Expr) -> Expr:
    if a.is_const_zero():
        return b
    if b.is_const_zero():
        return a
    parts = (a.args if a.op == "add" else (a,)) + (b.args if b.op == "add" else (b,))
    return Expr("add", parts)


def _mul2(a: Expr, b: Expr) -> Expr:
    if a.op == "const" and a.args[0] == 1:
        return b
    if b.op == "const" and b.args[0] == 1:
        return a
    parts = (a.args if a.op == "mul" else (a,)) + (b.args if b.op == "mul" else (b,))
    return Expr("mul", parts)


ZERO = Expr("const", (Fraction(0),))
ONE = Expr("const", (Fraction(1),))


def num(value) -> Expr:
    """Exact rational constant."""
    return Expr("const", (Fraction(value),))


def var(name: str) -> Expr:
    # identifiers: letter first, then letters/digits/underscores (the
    # underscore admits jet symbols like Dz1_x2)
    if not name or not name[0].isalpha() or not all(c.isalnum() or c == "_" for c in name):
        raise ValueError(f"invalid variable name {name!r}")
    return Expr("var", (name,))


def variables(names: str) -> list[Expr]:
    """Space-separated batch of variables: ``x, y = variables("x y")``."""
    return [var(n) for n in names.split()]


def sin(e) -> Expr:
    return Expr("func", ("sin", _coerce(e)))


def cos(e) -> Expr:
    return Expr("func", ("cos", _coerce(e)))


def exp(e) -> Expr:
    return Expr("func", ("exp", _coerce(e)))


def ln(e) -> Expr:
    return Expr("func", ("ln", _coerce(e)))


def func(name: str, *args) -> Expr:
    """Opaque function atom; derivatives become fresh atoms ``name@i``."""
    if name in KNOWN_FUNCS and len(args) != 1:
        raise ValueError(f"{name} takes exactly one argument")
    return Expr("func", (name,) + tuple(_coerce(a) for a in args))


# ---------------------------------------------------------------------------
# canonical form: polynomial quotient over atoms
#
# Poly: dict mapping monomial -> Fraction, monomial = sorted tuple of
# (atom_key, exponent).  Atom keys index _ATOM_REGISTRY which holds the
# canonical Expr of each atom (a var or a func node with canonical args).

_ATOM_REGISTRY: dict[tuple, Expr] = {}

_EMPTY_MONO: tuple = ()


def _register_atom(key: tuple, expr: Expr) -> tuple:
    if key not in _ATOM_REGISTRY:
        _ATOM_REGISTRY[key] = expr
    return key


def _p_const(c: Fraction) -> dict:
    return {} if c == 0 else {_EMPTY_MONO: c}


def _p_atom(key: tuple) -> dict:
    return {((key, 1),): Fraction(1)}


def _p_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for mono, c in b.items():
        s = out.get(mono, Fraction(0)) + c
        if s == 0:
            out.pop(mono, None)
        else:
            out[mono] = s
    return out


def _mono_mul(m1: tuple, m2: tuple) -> tuple:
    if not m1:
        return m2
    if not m2:
        return m1
    acc = dict(m1)
    for a, e in m2:
        acc[a] = acc.get(a, 0) + e
    return tuple(sorted(acc.items()))


def _p_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m = _mono_mul(m1, m2)
            s = out.get(m, Fraction(0)) + c1 * c2
            if s == 0:
                out.pop(m, None)
            else:
                out[m] = s
    return out


def _p_pow(a: dict, n: int) -> dict:
    out = _p_const(Fraction(1))
    base = a
    while n:
        if n & 1:
            out = _p_mul(out, base)
        base = _p_mul(base, base) if n > 1 else base
        n >>= 1
    return out


def _mono_order(item):
    mono, _ = item
    return (sum(e for _, e in mono), mono)


def _p_lead_coeff(p: dict) -> Fraction:
    return p[max(p, key=lambda m: (sum(e for _, e in m), m))]


def _p_scale(p: dict, c: Fraction) -> dict:
    if c == 1:
        return p
    return {m: v * c for m, v in p.items()}


def _content_mono(polys: Iterable[dict]) -> tuple:
    """Largest monomial dividing every monomial of every polynomial."""
    acc: Optional[dict] = None
    for p in polys:
        for mono in p:
            d = dict(mono)
            if acc is None:
                acc = d
            else:
                acc = {a: min(e, d[a]) for a, e in acc.items() if a in d}
            if not acc:
                return _EMPTY_MONO
    return tuple(sorted(acc.items())) if acc else _EMPTY_MONO


def _mono_divide(mono: tuple, by: tuple) -> tuple:
    if not by:
        return mono
    d = dict(mono)
    for a, e in by:
        r = d[a] - e
        if r:
            d[a] = r
        else:
            del d[a]
    return tuple(sorted(d.items()))


def _p_divide_mono(p: dict, by: tuple) -> dict:
    if not by:
        return p
    return {_mono_divide(m, by): c for m, c in p.items()}


class _Rat:
    __slots__ = ("num", "den")

    def __init__(self, num: dict, den: dict):
        self.num = num
        self.den = den


def _rat_normalize(num: dict, den: dict) -> _Rat:
    if not den:
        raise DivisionByZeroError("denominator is identically zero")
    if not num:
        return _Rat({}, _p_const(Fraction(1)))
    content = _content_mono([num, den])
    if content:
        num = _p_divide_mono(num, content)
        den = _p_divide_mono(den, content)
    lead = _p_lead_coeff(den)
    if lead != 1:
        inv = Fraction(1) / lead
        num = _p_scale(num, inv)
        den = _p_scale(den, inv)
    if den == {_EMPTY_MONO: Fraction(1)}:
        den = _p_const(Fraction(1))
    return _Rat(num, den)


def _rat_add(a: _Rat, b: _Rat) -> _Rat:
    if a.den == b.den:
        return _rat_normalize(_p_add(a.num, b.num), a.den)
    return _rat_normalize(
        _p_add(_p_mul(a.num, b.den), _p_mul(b.num, a.den)), _p_mul(a.den, b.den)
    )


def _rat_mul(a: _Rat, b: _Rat) -> _Rat:
    return _rat_normalize(_p_mul(a.num, b.num), _p_mul(a.den, b.den))


def _rat_div(a: _Rat, b: _Rat) -> _Rat:
    return _rat_normalize(_p_mul(a.num, b.den), _p_mul(a.den, b.num))


def _rat_pow(a: _Rat, n: int) -> _Rat:
    if n == 0:
        return _Rat(_p_const(Fraction(1)), _p_const(Fraction(1)))
    if n < 0:
        return _rat_normalize(_p_pow(a.den, -n), _p_pow(a.num, -n))
    return _rat_normalize(_p_pow(a.num, n), _p_pow(a.den, n))


def _pythag_reduce(p: dict) -> dict:
    """Rewrite cos(u)^2 -> 1 - sin(u)^2 until no even cosine powers remain."""
    while True:
        target = None
        for mono in p:
            for a, e in mono:
                if a[0] == "f" and a[1] == "cos" and e >= 2:
                    target = (mono, a)
                    break
            if target:
                break
        if target is None:
            return p
        mono, a = target
        c = p.pop(mono)
        rest = _mono_divide(mono, ((a, 2),))
        arg = _ATOM_REGISTRY[a].args[1]
        sin_key = _to_rat(sin(arg), False)
        sin_sq = _p_pow(sin_key.num, 2)
        repl = _p_add(_p_const(Fraction(1)), _p_scale(sin_sq, Fraction(-1)))
        p = _p_add(p, _p_mul({rest: c}, repl))


def _to_rat(e: Expr, pythagorean: bool) -> _Rat:
    op = e.op
    if op == "const":
        return _Rat(_p_const(e.args[0]), _p_const(Fraction(1)))
    if op == "var":
        key = _register_atom(("v", e.args[0]), e)
        return _Rat(_p_atom(key), _p_const(Fraction(1)))
    if op == "func":
        name = e.args[0]
        cargs = tuple(canon(a, pythagorean=pythagorean) for a in e.args[1:])
        atom = Expr("func", (name,) + cargs)
        key = _register_atom(("f", name, tuple(a.key() for a in cargs)), atom)
        return _Rat(_p_atom(key), _p_const(Fraction(1)))
    if op == "add":
        acc = _Rat({}, _p_const(Fraction(1)))
        for a in e.args:
            acc = _rat_add(acc, _to_rat(a, pythagorean))
        return acc
    if op == "mul":
        acc = _Rat(_p_const(Fraction(1)), _p_const(Fraction(1)))
        for a in e.args:
            acc = _rat_mul(acc, _to_rat(a, pythagorean))
        return acc
    if op == "pow":
        return _rat_pow(_to_rat(e.args[0], pythagorean), e.args[1])
    if op == "div":
        return _rat_div(_to_rat(e.args[0], pythagorean), _to_rat(e.args[1], pythagorean))
    raise AssertionError(f"unknown op {op}")


def _mono_to_expr(mono: tuple, coeff: Fraction) -> Expr:
    factors: list[Expr] = []
    if coeff != 1 or not mono:
        factors.append(Expr("const", (coeff,)))
    for a, e in mono:
        base = _ATOM_REGISTRY[a]
        factors.append(base if e == 1 else Expr("pow", (base, e)))
    if len(factors) == 1:
        return factors[0]
    return Expr("mul", tuple(factors))


def _p_to_expr(p: dict) -> Expr:
    if not p:
        return ZERO
    terms = sorted(p.items(), key=_mono_order, reverse=True)
    exprs = [_mono_to_expr(m, c) for m, c in terms]
    if len(exprs) == 1:
        return exprs[0]
    return Expr("add", tuple(exprs))


def canon(e: Expr, pythagorean: bool = False) -> Expr:
    """Canonical expanded form; idempotent, exact, deterministic."""
    if not pythagorean and e._canon is not None:
        return e._canon
    rat = _to_rat(e, pythagorean)
    if pythagorean:
        rat = _rat_normalize(_pythag_reduce(rat.num), _pythag_reduce(rat.den))
    num_e = _p_to_expr(rat.num)
    if rat.den == _p_const(Fraction(1)):
        out = num_e
    else:
        out = Expr("div", (num_e, _p_to_expr(rat.den)))
    if not pythagorean:
        object.__setattr__(e, "_canon", out)
        object.__setattr__(out, "_canon", out)
    return out


# ---------------------------------------------------------------------------
# differentiation


def diff(e: Expr, v) -> Expr:
    """Partial derivative with respect to variable `v`, canonicalized."""
    if isinstance(v, Expr):
        if v.op != "var":
            raise ValueError("can only differentiate by a variable")
        vname = v.args[0]
    else:
        vname = v
    return canon(_diff(e, vname))


def _diff(e: Expr, v: str) -> Expr:
    op = e.op
    if op == "const":
        return ZERO
    if op == "var":
        return ONE if e.args[0] == v else ZERO
    if op == "add":
        return Expr("add", tuple(_diff(a, v) for a in e.args))
    if op == "mul":
        terms = []
        args = e.args
        for i in range(len(args)):
            factors = args[:i] + (_diff(args[i], v),) + args[i + 1 :]
            terms.append(Expr("mul", factors))
        return Expr("add", tuple(terms))
    if op == "pow":
        base, n = e.args
        if n == 0:
            return ZERO
        return Expr(
            "mul",
            (Expr("const", (Fraction(n),)), Expr("pow", (base, n - 1)), _diff(base, v)),
        )
    if op == "div":
        a, b = e.args
        return Expr(
            "div",
            (
                _add2(Expr("mul", (_diff(a, v), b)), _neg(Expr("mul", (a, _diff(b, v))))),
                Expr("pow", (b, 2)),
            ),
        )
    if op == "func":
        name = e.args[0]
        args = e.args[1:]
        if name == "sin":
            outer = cos(args[0])
        elif name == "cos":
            outer = _neg(sin(args[0]))
        elif name == "exp":
            outer = e
        elif name == "ln":
            outer = Expr("div", (ONE, args[0]))
        else:
            # opaque atom: formal partials name@i, one per argument slot
            terms = []
            for i, a in enumerate(args, start=1):
                da = _diff(a, v)
                if da.is_const_zero():
                    continue
                partial = Expr("func", (f"{name}@{i}",) + args)
                terms.append(Expr("mul", (partial, da)))
            if not terms:
                return ZERO
            return Expr("add", tuple(terms)) if len(terms) > 1 else terms[0]
        return Expr("mul", (outer, _diff(args[0], v)))
    raise AssertionError(f"unknown op {op}")


# ---------------------------------------------------------------------------
# substitution and inspection


def subst(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions (simultaneous), canonicalized."""
    mapping = {k: _coerce(v) for k, v in mapping.items()}
    return canon(_subst(e, mapping))


def _subst(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    op = e.op
    if op == "const":
        return e
    if op == "var":
        return mapping.get(e.args[0], e)
    if op == "func":
        return Expr("func", (e.args[0],) + tuple(_subst(a, mapping) for a in e.args[1:]))
    if op == "pow":
        return Expr("pow", (_subst(e.args[0], mapping), e.args[1]))
    return Expr(op, tuple(_subst(a, mapping) for a in e.args))


def free_vars(e: Expr) -> set[str]:
    out: set[str] = set()
    _collect_vars(e, out)
    return out


def _collect_vars(e: Expr, out: set):
    op = e.op
    if op == "var":
        out.add(e.args[0])
    elif op == "func":
        for a in e.args[1:]:
            _collect_vars(a, out)
    elif op == "pow":
        _collect_vars(e.args[0], out)
    elif op in ("add", "mul", "div"):
        for a in e.args:
            _collect_vars(a, out)


def poly_coeffs(e: Expr) -> Optional[list[Fraction]]:
    """Coefficients of the canonical form in ascending monomial order, or
    None when the canonical form carries a nontrivial denominator."""
    rat = _to_rat(e, False)
    if rat.den != _p_const(Fraction(1)):
        return None
    monos = sorted(rat.num, key=lambda m: (sum(x for _, x in m), m))
    return [rat.num[m] for m in monos]


def opaque_atoms(e: Expr) -> dict[tuple, Expr]:
    """Distinct opaque function atoms of the canonical form, keyed."""
    rat = _to_rat(e, False)
    out: dict[tuple, Expr] = {}
    for p in (rat.num, rat.den):
        for mono in p:
            for a, _ in mono:
                if a[0] == "f" and a[1] not in KNOWN_FUNCS:
                    out[a] = _ATOM_REGISTRY[a]
                    _nested_opaque(_ATOM_REGISTRY[a], out)
    return out


def _nested_opaque(atom: Expr, out: dict):
    for a in atom.args[1:]:
        for k, v in opaque_atoms(a).items():
            out.setdefault(k, v)


# ---------------------------------------------------------------------------
# evaluation


def evaluate(
    e: Expr,
    point: Mapping[str, float],
    funcs: Optional[Mapping[str, Callable]] = None,
    atom_env: Optional[Mapping[tuple, float]] = None,
) -> float:
    """IEEE-double value at `point` (tree evaluation order).

    Opaque function atoms look up `funcs[name]` first, then `atom_env`
    keyed by the atom's registry key.  Denominators within 1e-12 of zero
    raise DivisionByZeroError; missing variables raise
    UnboundVariableError.
    """
    op = e.op
    if op == "const":
        return float(e.args[0])
    if op == "var":
        name = e.args[0]
        if name not in point:
            raise UnboundVariableError(f"variable {name!r} is not assigned")
        return float(point[name])
    if op == "add":
        return math.fsum(evaluate(a, point, funcs, atom_env) for a in e.args)
    if op == "mul":
        out = 1.0
        for a in e.args:
            out *= evaluate(a, point, funcs, atom_env)
        return out
    if op == "pow":
        base = evaluate(e.args[0], point, funcs, atom_env)
        n = e.args[1]
        if n < 0 and abs(base) <= EVAL_DIV_TOLERANCE:
            raise DivisionByZeroError("negative power of (near-)zero base")
        return base**n
    if op == "div":
        den = evaluate(e.args[1], point, funcs, atom_env)
        if abs(den) <= EVAL_DIV_TOLERANCE:
            raise DivisionByZeroError("denominator within 1e-12 of zero")
        return evaluate(e.args[0], point, funcs, atom_env) / den
    if op == "func":
        name = e.args[0]
        argv = [evaluate(a, point, funcs, atom_env) for a in e.args[1:]]
        if funcs and name in funcs:
            return float(funcs[name](*argv))
        if name in KNOWN_FUNCS:
            return KNOWN_FUNCS[name](argv[0])
        if atom_env is not None:
            cargs = tuple(canon(a) for a in e.args[1:])
            key = ("f", name, tuple(a.key() for a in cargs))
            if key in atom_env:
                return float(atom_env[key])
        raise UnboundFunctionError(f"no interpretation for function {name!r}")
    raise AssertionError(f"unknown op {op}")


# ---------------------------------------------------------------------------
# zero testing by canonicalization plus seeded sampling


@dataclass(frozen=True)
class ZeroTest:
    """Tri-state zero verdict: 'zero', 'nonzero' (with witness), 'unknown'."""

    verdict: str
    witness: Optional[dict] = None
    witness_value: Optional[float] = None
    seed: int = DEFAULT_SEED
    threshold: float = ZERO_THRESHOLD

    @property
    def is_zero(self) -> bool:
        return self.verdict == "zero"

    @property
    def is_nonzero(self) -> bool:
        return self.verdict == "nonzero"


def _box_bounds(box, name: str) -> tuple[float, float]:
    if box is None:
        return DEFAULT_BOX
    if isinstance(box, dict):
        lo, hi = box.get(name, DEFAULT_BOX)
    else:
        lo, hi = box
    return float(lo), float(hi)


def sample_point(
    names: Iterable[str],
    atom_keys: Iterable[tuple],
    rng: random.Random,
    box=None,
) -> tuple[dict, dict]:
    """One sampling assignment: variables uniform in the box, opaque atoms
    uniform in the default box (a generic-coefficient draw)."""
    point = {}
    for n in sorted(names):
        lo, hi = _box_bounds(box, n)
        point[n] = rng.uniform(lo, hi)
    atoms = {}
    for k in sorted(atom_keys):
        atoms[k] = rng.uniform(*DEFAULT_BOX)
    return point, atoms


def is_zero(
    e: Expr,
    box=None,
    seed: int = DEFAULT_SEED,
    samples: int = SAMPLE_BUDGET,
    threshold: float = ZERO_THRESHOLD,
) -> ZeroTest:
    """Zero iff the canonical numerator is the zero polynomial; otherwise
    sample for a witness.  No witness within the budget yields 'unknown'
    (never silently 'zero')."""
    rat = _to_rat(e, False)
    if not rat.num:
        return ZeroTest("zero", seed=seed, threshold=threshold)
    names = sorted(free_vars(e))
    atoms = sorted(opaque_atoms(e))
    rng = random.Random(seed)
    for _ in range(samples):
        point, atom_env = sample_point(names, atoms, rng, box)
        try:
            val = evaluate(canon(e), point, atom_env=atom_env)
        except DivisionByZeroError:
            continue
        except (OverflowError, ValueError):
            continue
        if abs(val) > threshold:
            witness = dict(point)
            witness.update({_atom_label(k): v for k, v in atom_env.items()})
            return ZeroTest("nonzero", witness, val, seed, threshold)
    return ZeroTest("unknown", seed=seed, threshold=threshold)


def _atom_label(key: tuple) -> str:
    return str(_ATOM_REGISTRY[key])


# ---------------------------------------------------------------------------
# printing


_PREC = {"add": 10, "mul": 20, "div": 20, "pow": 40, "const": 100, "var": 100, "func": 100}


def _format(e: Expr, parent_prec: int) -> str:
    op = e.op
    if op == "const":
        c = e.args[0]
        s = str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
        if c < 0 and parent_prec > 10:
            return f"({s})"
        if c.denominator != 1 and parent_prec >= 40:
            return f"({s})"
        return s
    if op == "var":
        return e.args[0]
    if op == "func":
        inner = ", ".join(_format(a, 0) for a in e.args[1:])
        return f"{e.args[0]}({inner})"
    if op == "pow":
        base = _format(e.args[0], 41)
        return f"{base}^{e.args[1]}"
    if op == "add":
        parts = [_format(e.args[0], 10)]
        for a in e.args[1:]:
            s = _format(a, 10)
            if s.startswith("-"):
                parts.append(" - " + s[1:])
            else:
                parts.append(" + " + s)
        out = "".join(parts)
        return f"({out})" if parent_prec > 10 else out
    if op == "mul":
        args = list(e.args)
        sign = ""
        if args and args[0].op == "const":
            c = args[0].args[0]
            if c < 0:
                sign = "-"
                c = -c
            if c == 1 and len(args) > 1:
                args = args[1:]
            else:
                args = [Expr("const", (c,))] + args[1:]
        factors = [_format(a, 21) for a in args]
        out = sign + "*".join(factors)
        return f"({out})" if parent_prec > 20 else out
    if op == "div":
        a = _format(e.args[0], 30)
        b = _format(e.args[1], 30)
        out = f"{a}/{b}"
        return f"({out})" if parent_prec > 20 else out
    raise AssertionError(op)


# ---------------------------------------------------------------------------
# parsing


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message):
        raise ParseError(message, self.pos, self.text)

    def peek(self):
        t = self.text
        n = len(t)
        p = self.pos
        while p < n and t[p].isspace():
            p += 1
        self.pos = p
        if p >= n:
            return None
        return t[p]

    def next_token(self):
        ch = self.peek()
        if ch is None:
            return None, None
        p = self.pos
        t = self.text
        if ch.isdigit():
            q = p
            while q < len(t) and t[q].isdigit():
                q += 1
            self.pos = q
            return "int", int(t[p:q])
        if ch.isalpha():
            q = p
            while q < len(t) and (t[q].isalnum() or t[q] == "_"):
                q += 1
            self.pos = q
            return "ident", t[p:q]
        if ch in "+-*/^(),":
            self.pos = p + 1
            return ch, ch
        self.error(f"unexpected character {ch!r}")


class _Parser:
    """Recursive descent for: +,- < *,／ < unary- < ^ (integer exponents)."""

    def __init__(self, text: str):
        self.tk = _Tokenizer(text)

    def parse(self) -> Expr:
        e = self.add()
        if self.tk.peek() is not None:
            self.tk.error("trailing input")
        return e

    def add(self) -> Expr:
        e = self.mul()
        while True:
            ch = self.tk.peek()
            if ch == "+":
                self.tk.next_token()
                e = _add2(e, self.mul())
            elif ch == "-":
                self.tk.next_token()
                e = _add2(e, _neg(self.mul()))
            else:
                return e

    def mul(self) -> Expr:
        e = self.unary()
        while True:
            ch = self.tk.peek()
            if ch == "*":
                self.tk.next_token()
                e = _mul2(e, self.unary())
            elif ch == "/":
                self.tk.next_token()
                e = Expr("div", (e, self.unary()))
            else:
                return e

    def unary(self) -> Expr:
        if self.tk.peek() == "-":
            self.tk.next_token()
            return _neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        e = self.atom()
        if self.tk.peek() == "^":
            self.tk.next_token()
            sign = 1
            if self.tk.peek() == "-":
                self.tk.next_token()
                sign = -1
            kind, val = self.tk.next_token()
            if kind == "int":
                return Expr("pow", (e, sign * val))
            if kind == "(":
                inner = self.add()
                k2, _ = self.tk.next_token()
                if k2 != ")":
                    self.tk.error("expected ')' in exponent")
                c = inner.const_value()
                if c is None or c.denominator != 1:
                    self.tk.error("exponent must be an integer")
                return Expr("pow", (e, sign * int(c)))
            self.tk.error("exponent must be an integer")

        return e

    def atom(self) -> Expr:
        kind, val = self.tk.next_token()
        if kind == "int":
            return Expr("const", (Fraction(val),))
        if kind == "ident":
            if self.tk.peek() == "(":
                self.tk.next_token()
                args = [self.add()]
                while self.tk.peek() == ",":
                    self.tk.next_token()
                    args.append(self.add())
                k2, _ = self.tk.next_token()
                if k2 != ")":
                    self.tk.error("expected ')' after function arguments")
                if val in KNOWN_FUNCS and len(args) != 1:
                    self.tk.error(f"{val} takes exactly one argument")
                return Expr("func", (val,) + tuple(args))
            return Expr("var", (val,))
        if kind == "(":
            e = self.add()
            k2, _ = self.tk.next_token()
            if k2 != ")":
                self.tk.error("expected ')'")
            return e
        self.tk.error(f"unexpected token {val!r}" if kind else "unexpected end of input")


def parse(text: str) -> Expr:
    """Parse the infix expression grammar used throughout file formats."""
    return _Parser(text).parse()
