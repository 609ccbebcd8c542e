"""Protection relation, memory-cost measurement and program classification.

Costs are sampled by running the machine at several sizes of the program
parameter.  The sampled curves are fitted exactly with Newton divided
differences, which is enough because every corpus program has a constant,
affine or quadratic cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .errors import AlignmentError
from .globaltypes import check_program_global
from .linear import check_program
from .machine import DEFAULT_FUEL, run
from .syntax import LI, LO, OpType, Program, QualificationList, Stor, map_quals

Ratio = Union[Fraction, str]
INFINITY = "inf"
UNDEFINED = "undefined"
DEFAULT_SAMPLES = (4, 8, 16)


# ---------------------------------------------------------------- protection


def _skeleton(s: Stor) -> Stor:
    return map_quals(s, lambda q: "_")


def protects_type(alpha: OpType, beta: OpType) -> bool:
    """``alpha`` (linear) protects ``beta`` (global).

    Trivially true when the global output is ``lo``.  Otherwise the linear
    output must be ``li``, some input must carry the output's global
    qualifier, and every input carrying it must be ``li`` on the linear side.
    """
    if alpha.name != beta.name or len(alpha.inputs) != len(beta.inputs):
        raise AlignmentError(f"cannot compare {alpha} with {beta}")
    shapes_a = [_skeleton(s) for s in (*alpha.inputs, alpha.output)]
    shapes_b = [_skeleton(s) for s in (*beta.inputs, beta.output)]
    if shapes_a != shapes_b:
        raise AlignmentError(f"pretypes of {alpha} and {beta} differ")
    g = beta.output.q
    if g == LO:
        return True
    if alpha.output.q != LI:
        return False
    sharing = [i for i, s in enumerate(beta.inputs) if s.q == g]
    if not sharing:
        return False
    return all(alpha.inputs[i].q == LI for i in sharing)


@dataclass
class ProtectionReport:
    """Outcome of comparing two aligned signatures entry by entry."""

    protected: bool
    failing: List[int] = field(default_factory=list)

    @property
    def first_failing(self) -> Optional[int]:
        return self.failing[0] if self.failing else None


def protects_sig(sig_q: Sequence[OpType], sig_g: Sequence[OpType]) -> ProtectionReport:
    """Positional comparison of a linear and a global signature.

    The returned report lists every failing position, so callers can ask for
    the first one or check whether a particular entry is unprotected.
    """
    sig_q, sig_g = list(sig_q), list(sig_g)
    if len(sig_q) != len(sig_g):
        raise AlignmentError(f"signatures have {len(sig_q)} and {len(sig_g)} entries")
    failing = []
    for i, (a, b) in enumerate(zip(sig_q, sig_g)):
        if a.kind != b.kind:
            raise AlignmentError(f"entry {i}: {a.kind} against {b.kind}")
        if not protects_type(a, b):
            failing.append(i)
    return ProtectionReport(not failing, failing)


# --------------------------------------------------------------------- costs


def qualified(prog: Program, quals: Optional[QualificationList]) -> Tuple[Program, str]:
    """Annotate ``prog`` with ``quals`` and pick the machine mode to run it in."""
    if quals is None:
        return prog, "un"
    if quals.system == "global":
        return check_program_global(prog, quals).program, "gl"
    return check_program(prog, quals).program, "li"


def cost(
    prog: Program,
    quals: Optional[QualificationList],
    n: int,
    list_adjust: bool = False,
    fuel: int = DEFAULT_FUEL,
) -> int:
    """Net memory cost of one run at size ``n``.

    ``quals`` of ``None`` runs the unrestricted program.  With
    ``list_adjust`` the ``2n`` cells spent building the input list are
    subtracted.
    """
    annotated, mode = qualified(prog, quals)
    return _cost(annotated, mode, n, list_adjust, fuel)


def _cost(annotated: Program, mode: str, n: int, list_adjust: bool, fuel: int = DEFAULT_FUEL) -> int:
    params = {p: n for p in annotated.params}
    c = run(annotated, mode, params, fuel=fuel).cost
    return c - 2 * n if list_adjust else c


@dataclass
class CostCurve:
    """Sampled costs with their exact polynomial fit.

    ``coeffs`` holds the fitted polynomial in the monomial basis, lowest
    degree first, trimmed of trailing zeros.  The degree is only reliable up
    to ``len(samples) - 1``.
    """

    samples: List[Tuple[int, int]]
    coeffs: List[Fraction]

    @property
    def degree(self) -> int:
        return max(len(self.coeffs) - 1, 0)

    @property
    def kind(self) -> str:
        return {0: "constant", 1: "affine"}.get(self.degree, "superlinear")

    @property
    def constant(self) -> bool:
        return self.degree == 0

    @property
    def leading(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def describe(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for k in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[k]
            if c == 0:
                continue
            mono = "" if k == 0 else ("n" if k == 1 else f"n^{k}")
            if mono and c == 1:
                coef = ""
            elif mono and c == -1:
                coef = "-"
            else:
                coef = str(c)
            terms.append(coef + mono)
        return " + ".join(terms).replace("+ -", "- ")

    def as_dict(self) -> Dict[str, object]:
        return {
            "samples": [list(s) for s in self.samples],
            "kind": self.kind,
            "degree": self.degree,
            "polynomial": self.describe(),
        }


def fit(samples: Sequence[Tuple[int, int]]) -> CostCurve:
    """Exact interpolating polynomial through the samples."""
    pts = sorted((int(n), int(c)) for n, c in samples)
    if len(pts) < 3:
        raise ValueError("fit needs at least three samples")
    xs = [n for n, _ in pts]
    if len(set(xs)) != len(xs):
        raise ValueError("sample sizes must be distinct")
    # Newton divided differences.
    table = [Fraction(c) for _, c in pts]
    newton = [table[0]]
    for order in range(1, len(pts)):
        table = [
            (table[i + 1] - table[i]) / (xs[i + order] - xs[i]) for i in range(len(table) - 1)
        ]
        newton.append(table[0])
    # Convert the Newton form to monomial coefficients.
    coeffs = [Fraction(0)] * len(pts)
    basis = [Fraction(1)]
    for k, a in enumerate(newton):
        for i, b in enumerate(basis):
            coeffs[i] += a * b
        nxt = [Fraction(0)] * (len(basis) + 1)
        for i, b in enumerate(basis):
            nxt[i + 1] += b
            nxt[i] -= xs[k] * b
        basis = nxt
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return CostCurve(pts, coeffs)


def ratio(a: CostCurve, b: CostCurve) -> Ratio:
    """Limit of ``a(n) / b(n)`` as ``n`` grows."""
    if a.degree < b.degree:
        return Fraction(0)
    if a.degree > b.degree:
        return INFINITY
    if b.leading == 0:
        return UNDEFINED if a.leading == 0 else INFINITY
    return a.leading / b.leading


def residue(curve_g: CostCurve, curve_q: CostCurve) -> CostCurve:
    """Pointwise difference of the global and linear cost curves."""
    q = dict(curve_q.samples)
    return fit([(n, c - q[n]) for n, c in curve_g.samples])


def show_ratio(r: Ratio) -> str:
    return str(r)


# ------------------------------------------------------------ classification


@dataclass
class Classification:
    """The six category flags together with the measured curves."""

    protected: bool
    linear_improvement: bool
    imperative_improvement: bool
    full_linear: bool
    full_imperative: bool
    li_match: bool
    linear_ratio: Ratio
    global_ratio: Ratio
    residue_curve: CostCurve
    list_adjusted: bool
    first_unprotected: Optional[int] = None
    curves: Dict[str, CostCurve] = field(default_factory=dict)

    FLAGS = (
        "protected",
        "linear_improvement",
        "imperative_improvement",
        "full_linear",
        "full_imperative",
        "li_match",
    )

    def flags(self) -> Dict[str, bool]:
        return {k: getattr(self, k) for k in self.FLAGS}

    def report(self, program: str = "") -> Dict[str, object]:
        out: Dict[str, object] = {
            "program": program,
            "protected": self.protected,
            "first_unprotected_occ": self.first_unprotected,
        }
        for mode in ("un", "li", "gl"):
            out[f"c_{mode}"] = [list(s) for s in self.curves[mode].samples]
        out["linear_ratio"] = show_ratio(self.linear_ratio)
        out["global_ratio"] = show_ratio(self.global_ratio)
        out["residue_constant"] = self.residue_curve.constant
        out["fits"] = {m: c.describe() for m, c in self.curves.items()}
        out["list_adjusted"] = self.list_adjusted
        out.update(self.flags())
        return out


def sample_curve(
    annotated: Program, mode: str, samples: Sequence[int], list_adjust: bool = False
) -> CostCurve:
    return fit([(n, _cost(annotated, mode, n, list_adjust)) for n in samples])


def classify(
    prog: Program,
    quals_q: QualificationList,
    quals_g: QualificationList,
    samples: Sequence[int] = DEFAULT_SAMPLES,
    list_adjust: bool = False,
) -> Classification:
    """Measure a program under both signatures and derive the category flags."""
    lin = check_program(prog, quals_q).program
    glo = check_program_global(prog, quals_g).program
    prot = protects_sig(quals_q.entries, quals_g.entries)
    curves = {
        "un": sample_curve(prog, "un", samples, list_adjust),
        "li": sample_curve(lin, "li", samples, list_adjust),
        "gl": sample_curve(glo, "gl", samples, list_adjust),
    }
    lin_ratio = ratio(curves["li"], curves["un"])
    glo_ratio = ratio(curves["gl"], curves["un"])
    res = residue(curves["gl"], curves["li"])
    return Classification(
        protected=prot.protected,
        linear_improvement=lin_ratio == 0,
        imperative_improvement=glo_ratio == 0,
        full_linear=curves["li"].constant,
        full_imperative=curves["gl"].constant,
        li_match=res.constant,
        linear_ratio=lin_ratio,
        global_ratio=glo_ratio,
        residue_curve=res,
        list_adjusted=list_adjust,
        first_unprotected=prot.first_failing,
        curves=curves,
    )
