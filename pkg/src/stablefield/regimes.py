"""Regime classification for the decay of rho(n, m) and rho(n, -m).

Each axis is cut by the thresholds 1/alpha < 1 < 1/(alpha-1); which cells the
pair (beta1, beta2) falls into decides the normaliser (a :class:`RateFunction`)
and the limiting constant (a :class:`ConstantDescriptor` consumed by
:mod:`stablefield.constants`).  Orientations not listed directly are reduced
by swapping (beta1, n) <-> (beta2, m); the swap is recorded in ``mirrored``.
"""

import ast
import math
import operator
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional

from .errors import DirectionRequired, InvalidSpec, LogDomainError
from .field import validate_params

REL_TOL = 1e-12


# --------------------------------------------------------------------------
# directions and rates
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Direction:
    """Limit of h_n = m_n^-beta2 / n^-beta1: ``zero``, ``const`` (with c) or ``inf``."""

    kind: str
    c: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("zero", "const", "inf"):
            raise ValueError(f"unknown direction kind {self.kind!r}")
        if self.kind == "const":
            if self.c is None or not (self.c > 0 and math.isfinite(self.c)):
                raise ValueError("ToConst needs a finite c > 0")

    @classmethod
    def to_zero(cls):
        return cls("zero")

    @classmethod
    def to_const(cls, c):
        return cls("const", float(c))

    @classmethod
    def to_infinity(cls):
        return cls("inf")

    @classmethod
    def parse(cls, text):
        t = str(text).strip().lower()
        if t in ("zero", "0", "tozero"):
            return cls.to_zero()
        if t in ("inf", "infinity", "toinfinity"):
            return cls.to_infinity()
        if t.startswith("const:") or t.startswith("c="):
            return cls.to_const(float(t.split(":" if ":" in t else "=", 1)[1]))
        try:
            return cls.to_const(float(t))
        except ValueError:
            raise InvalidSpec(f"cannot parse direction {text!r}") from None

    def mirrored(self):
        if self.kind == "zero":
            return Direction("inf")
        if self.kind == "inf":
            return Direction("zero")
        return Direction("const", 1.0 / self.c)

    def subcase(self):
        return {"zero": "a", "const": "b", "inf": "c"}[self.kind]

    def to_json(self):
        return {"kind": self.kind, "c": self.c}


@dataclass(frozen=True)
class RateFunction:
    """n^a m^b prod ln(n^u m^v)."""

    a: float
    b: float
    logs: tuple = ()

    def mirrored(self):
        return RateFunction(self.b, self.a, tuple((v, u) for u, v in self.logs))

    def to_json(self):
        return {"a": self.a, "b": self.b, "logs": [list(l) for l in self.logs]}

    def __call__(self, n, m):
        return rate_eval(self, n, m)


def rate_eval(rate, n, m):
    """n^a m^b prod ln(n^u m^v); every log argument must exceed 1."""
    n = float(n)
    m = float(m)
    if n <= 0 or m <= 0:
        raise LogDomainError("n and m must be positive")
    ln_n, ln_m = math.log(n), math.log(m)
    val = math.exp(rate.a * ln_n + rate.b * ln_m)
    for u, v in rate.logs:
        arg = u * ln_n + v * ln_m
        if arg <= 0:
            raise LogDomainError(
                f"ln(n^{u} m^{v}) needs n^{u} m^{v} > 1 (n={n:g}, m={m:g})"
            )
        val *= arg
    return val


# --------------------------------------------------------------------------
# constants and regimes
# --------------------------------------------------------------------------

RECIPES = (
    "SignedPowerSeries",
    "VIntegral2DPos",
    "SeriesTimesBeta1D",
    "Beta1DOnly",
    "ColSeries",
    "RowSeries",
    "UnitConstant",
    "VIntegral2DNeg",
    "DoubleWeightSeries",
    "CMixedSeries",
    "SeriesVIntegralMix",
)


@dataclass(frozen=True)
class ConstantDescriptor:
    """Symbolic recipe for a limiting constant.

    ``args`` holds recipe parameters in the frame of the (possibly
    transposed) parameters; ``transpose`` tells the evaluator to swap the
    filter's axes before evaluating.
    """

    recipe: str
    alpha: float
    beta1: float
    beta2: float
    args: tuple = ()
    transpose: bool = False

    def arg(self, name, default=None):
        for k, v in self.args:
            if k == name:
                return v
        return default

    def to_json(self):
        return {
            "recipe": self.recipe,
            "alpha": self.alpha,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "args": {k: v for k, v in self.args},
            "transpose": self.transpose,
        }


@dataclass(frozen=True)
class Regime:
    theorem: int
    case_id: int
    subcase: Optional[str]
    mirrored: bool
    rate: RateFunction
    constant: ConstantDescriptor
    direction: Optional[Direction] = None
    uses_direction: bool = False

    @property
    def has_logs(self):
        return bool(self.rate.logs)

    @property
    def label(self):
        s = f"T{self.theorem}.{self.case_id}"
        if self.subcase:
            s += f"({self.subcase})"
        return s + ("*" if self.mirrored else "")

    def to_json(self):
        return {
            "theorem": self.theorem,
            "case": self.case_id,
            "subcase": self.subcase,
            "mirrored": self.mirrored,
            "rate": self.rate.to_json(),
            "constant_recipe": self.constant.to_json(),
            "direction": None if self.direction is None else self.direction.to_json(),
        }


@dataclass(frozen=True)
class Uncovered:
    theorem: int
    reason: str

    label = "uncovered"

    def to_json(self):
        return {"theorem": self.theorem, "case": None, "uncovered": True, "reason": self.reason}


# --------------------------------------------------------------------------
# exact/tolerant comparison
# --------------------------------------------------------------------------


def _cmp(x, y, xq=None, yq=None):
    """-1, 0, 1 comparing x with y; exact when both rationals are known."""
    if xq is not None and yq is not None:
        return (xq > yq) - (xq < yq)
    if abs(x - y) <= REL_TOL * max(abs(x), abs(y), 1e-300):
        return 0
    return 1 if x > y else -1


def _threshold(params):
    """(U, U_exact) with U = 1/(alpha-1), or (inf, None) for alpha <= 1."""
    a = params.alpha
    if a <= 1.0:
        return math.inf, None
    aq = params.alpha_q
    if aq is not None:
        return float(1 / (aq - 1)), 1 / (aq - 1)
    return 1.0 / (a - 1.0), None


def _zone_pos(params, which):
    b = params.beta1 if which == 1 else params.beta2
    bq = params.beta1_q if which == 1 else params.beta2_q
    U, Uq = _threshold(params)
    c = _cmp(b, U, bq, Uq)
    return {-1: "lo", 0: "eq", 1: "hi"}[c]


def _zone_neg(params, which):
    b = params.beta1 if which == 1 else params.beta2
    bq = params.beta1_q if which == 1 else params.beta2_q
    U, Uq = _threshold(params)
    cu = _cmp(b, U, bq, Uq)
    if cu > 0:
        return "hi"
    if cu == 0:
        return "eq"
    c1 = _cmp(b, 1.0, bq, Fraction(1) if bq is not None else None)
    return {-1: "lo", 0: "one", 1: "mid"}[c1]


def _sum_vs_alpha(params):
    p = params
    if p.exact:
        s = 1 / p.beta1_q + 1 / p.beta2_q
        return (s > p.alpha_q) - (s < p.alpha_q)
    s = 1.0 / p.beta1 + 1.0 / p.beta2
    return _cmp(s, p.alpha)


def _mirror(regime):
    c = regime.constant
    desc = replace(c, beta1=c.beta2, beta2=c.beta1, transpose=not c.transpose)
    return replace(regime, mirrored=not regime.mirrored, rate=regime.rate.mirrored(), constant=desc)


def _desc(params, recipe, **args):
    return ConstantDescriptor(
        recipe, params.alpha, params.beta1, params.beta2, tuple(sorted(args.items()))
    )


# --------------------------------------------------------------------------
# positive quadrant
# --------------------------------------------------------------------------


def classify_pos(params):
    """Regime of rho(n, m) as n, m -> infinity jointly (no uncovered cells)."""
    p = params
    a, b1, b2 = p.alpha, p.beta1, p.beta2
    if a <= 1.0:
        return Regime(1, 2, None, False, RateFunction(1 - a * b1, 1 - a * b2), _desc(p, "VIntegral2DPos"))
    key = (_zone_pos(p, 1), _zone_pos(p, 2))
    if key in (("lo", "hi"), ("lo", "eq"), ("hi", "eq")):
        return _mirror(classify_pos(p.transposed()))
    if key == ("hi", "hi"):
        return Regime(1, 1, None, False, RateFunction(-b1, -b2), _desc(p, "SignedPowerSeries"))
    if key == ("lo", "lo"):
        return Regime(1, 2, None, False, RateFunction(1 - a * b1, 1 - a * b2), _desc(p, "VIntegral2DPos"))
    if key == ("hi", "lo"):
        return Regime(
            1, 3, None, False, RateFunction(-b1, 1 - b2 * a),
            _desc(p, "SeriesTimesBeta1D", p=b2 * (a - 1), q=b2, power=a - 1, s=b1 * (a - 1)),
        )
    if key == ("eq", "lo"):
        return Regime(
            1, 4, None, False, RateFunction(-b1, 1 - b2 * a, ((1.0, 0.0),)),
            _desc(p, "Beta1DOnly", p=b2 * (a - 1), q=b2),
        )
    if key == ("eq", "hi"):
        return Regime(
            1, 5, None, False, RateFunction(-b1, -b2, ((1.0, 0.0),)),
            _desc(p, "ColSeries", power=a - 1, s=b2 * (a - 1)),
        )
    return Regime(
        1, 6, None, False, RateFunction(-b1, -b2, ((1.0, 0.0), (0.0, 1.0))), _desc(p, "UnitConstant")
    )


# --------------------------------------------------------------------------
# negative quadrant
# --------------------------------------------------------------------------


def classify_neg(params, direction=None):
    """Regime of rho(n, -m); ``direction`` selects sub-cases in cases 4-9."""
    p = params
    a = p.alpha
    sa = _sum_vs_alpha(p)
    if a <= 1.0:
        if sa > 0:
            return _neg_case1(p)
        if sa < 0:
            return _neg_directional(p, 6, direction)
        return Uncovered(2, "1/beta1 + 1/beta2 = alpha")
    z1, z2 = _zone_neg(p, 1), _zone_neg(p, 2)
    if a >= 2.0:
        # 1/(alpha-1) = 1: the band (1, 1/(alpha-1)) is empty
        z1 = "eq" if z1 == "one" else z1
        z2 = "eq" if z2 == "one" else z2
    small = ("lo", "one", "mid")
    if z1 in small and z2 in small:
        if sa > 0:
            return _neg_case1(p)
        if sa == 0:
            return Uncovered(2, "1/beta1 + 1/beta2 = alpha")
        if z1 == "mid" and z2 == "mid":
            return _neg_directional(p, 6, direction)
        return Uncovered(2, "1/beta1 + 1/beta2 < alpha outside the listed band")
    rank = {"lo": 0, "one": 1, "mid": 2, "eq": 3, "hi": 4}
    if rank[z1] < rank[z2]:
        t = direction.mirrored() if direction is not None else None
        r = classify_neg(p.transposed(), t)
        if isinstance(r, Uncovered):
            return r
        r = _mirror(r)
        return replace(r, direction=direction)
    if z2 == "one":
        return Uncovered(2, "beta = 1 boundary")
    key = (z1, z2)
    if key == ("hi", "lo"):
        return _neg_case2(p)
    if key == ("eq", "lo"):
        return _neg_case3(p)
    if key == ("hi", "hi"):
        return _neg_directional(p, 4, direction)
    if key == ("hi", "mid"):
        return _neg_directional(p, 5, direction)
    if key == ("hi", "eq"):
        if a >= 2.0:
            return Uncovered(2, "beta1 > 1/(alpha-1) = beta2 requires alpha < 2")
        return _neg_directional(p, 7, direction)
    if key == ("eq", "mid"):
        return _neg_directional(p, 8, direction)
    if key == ("eq", "eq"):
        if a >= 2.0:
            return Uncovered(2, "beta1 = beta2 = 1/(alpha-1) requires alpha < 2")
        return _neg_directional(p, 9, direction)
    return Uncovered(2, f"no listed case for zones {key}")


def _neg_case1(p):
    a, b1, b2 = p.alpha, p.beta1, p.beta2
    return Regime(2, 1, None, False, RateFunction(1 - b1 * a, 1 - b2 * a), _desc(p, "VIntegral2DNeg"))


def _neg_case2(p):
    a, b1, b2 = p.alpha, p.beta1, p.beta2
    return Regime(
        2, 2, None, False, RateFunction(-b1, 1 - b2 * a),
        _desc(p, "SeriesTimesBeta1D", p=b2, q=b2 * (a - 1), power=a - 1, s=b1 * (a - 1)),
    )


def _neg_case3(p):
    a, b1, b2 = p.alpha, p.beta1, p.beta2
    return Regime(
        2, 3, None, False, RateFunction(1 - b1 * a, 1 - b2 * a, ((1.0, 0.0),)),
        _desc(p, "Beta1DOnly", p=b2, q=b2 * (a - 1)),
    )


def _neg_directional(p, case, direction):
    if direction is None:
        raise DirectionRequired(f"case {case} of the negative quadrant depends on the lag direction")
    a, b1, b2 = p.alpha, p.beta1, p.beta2
    sub = direction.subcase()
    c = direction.c
    r_mixed = RateFunction(-b1, -b2 * (a - 1))
    r_swapped = RateFunction(-b1 * (a - 1), -b2)
    r_row_int = RateFunction(-b1 / b2, 1 - b2 * a)
    r_col_int = RateFunction(1 - b1 * a, -b2 / b1)
    dws_c = _desc(p, "DoubleWeightSeries", pi=a - 1, si=b1 * (a - 1), pj=1.0, sj=b2)
    cm_5b = _desc(p, "CMixedSeries", c=c, form="c_inside")
    mix_row = _desc(p, "SeriesVIntegralMix", axis="row")
    if case == 4:
        if sub == "a":
            rate, desc = r_swapped, _desc(p, "DoubleWeightSeries", pi=1.0, si=b1, pj=a - 1, sj=b2 * (a - 1))
        elif sub == "b":
            rate, desc = r_swapped, _desc(p, "CMixedSeries", c=c, form="c_outside")
        else:
            rate, desc = r_mixed, dws_c
    elif case == 5:
        rate, desc = {"a": (r_row_int, mix_row), "b": (r_mixed, cm_5b), "c": (r_mixed, dws_c)}[sub]
    elif case == 6:
        if sub == "a":
            rate, desc = r_row_int, mix_row
        elif sub == "b":
            # the displayed c^2 form fails numerically; the large-beta form holds
            rate, desc = r_swapped, _desc(p, "CMixedSeries", c=c, form="c_outside")
        else:
            rate, desc = r_col_int, _desc(p, "SeriesVIntegralMix", axis="col")
    elif case == 7:
        if sub == "a":
            rate = RateFunction(-b1 / b2, 1 - b2 * a, ((-b1 / b2, 1.0),))
            desc = _desc(p, "RowSeries", power=1.0, s=b1)
        else:
            rate, desc = r_mixed, (cm_5b if sub == "b" else dws_c)
    elif case == 8:
        if sub == "a":
            rate, desc = r_row_int, mix_row
        elif sub == "b":
            rate, desc = r_mixed, cm_5b
        else:
            rate = RateFunction(1 - b1 * a, -b2 / b1, ((1.0, -b2 / b1),))
            desc = _desc(p, "ColSeries", power=1.0, s=b2)
    elif case == 9:
        if sub == "a":
            rate = RateFunction(-b1 / b2, 1 - b2 * a, ((-b1 / b2, 1.0),))
            desc = _desc(p, "RowSeries", power=1.0, s=b1)
        elif sub == "b":
            rate, desc = r_mixed, cm_5b
        else:
            rate = RateFunction(1 - b1 * a, -b2 / b1, ((1.0, -b2 / b1),))
            desc = _desc(p, "ColSeries", power=1.0, s=b2)
    else:
        raise AssertionError(case)
    return Regime(2, case, sub, False, rate, desc, direction, True)


def classify(params, quadrant="pos", direction=None):
    if quadrant == "pos":
        return classify_pos(params)
    if quadrant == "neg":
        return classify_neg(params, direction)
    raise ValueError("quadrant must be 'pos' or 'neg'")


# --------------------------------------------------------------------------
# rational parameter expressions
# --------------------------------------------------------------------------

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}


def parse_param(text, env=None):
    """Evaluate a small arithmetic expression exactly.

    Decimal literals become exact fractions, so "1.5" and "3/2" agree;
    names are looked up in ``env`` (e.g. {"alpha": Fraction(3, 2)}).
    Non-integer powers fall back to floats.
    """
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    if isinstance(text, float):
        return text
    env = env or {}
    try:
        tree = ast.parse(str(text).strip(), mode="eval")
    except SyntaxError:
        raise InvalidSpec(f"cannot parse parameter expression {text!r}") from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            if isinstance(node.value, float):
                seg = ast.get_source_segment(str(text).strip(), node)
                return Fraction(seg) if seg else Fraction(node.value)
            return Fraction(node.value)
        if isinstance(node, ast.Name):
            if node.id not in env:
                raise InvalidSpec(f"unknown name {node.id!r} in {text!r}")
            return env[node.id]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            l, r = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Pow):
                if isinstance(r, Fraction) and r.denominator == 1 and isinstance(l, Fraction):
                    return l ** int(r)
                return float(l) ** float(r)
            if isinstance(node.op, ast.Div) and r == 0:
                raise InvalidSpec(f"division by zero in {text!r}")
            return _BINOPS[type(node.op)](l, r)
        raise InvalidSpec(f"unsupported syntax in parameter expression {text!r}")

    return ev(tree)


def params_from_text(alpha, beta1, beta2):
    """Validated params from (possibly symbolic) strings; beta expressions may use ``alpha``."""
    a = parse_param(alpha)
    env = {"alpha": a}
    b1 = parse_param(beta1, env)
    env["beta1"] = b1
    b2 = parse_param(beta2, env)
    return validate_params(a, b1, b2)
