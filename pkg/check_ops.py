"""
Operations available to `check` lines of a check file.

Each operation receives a CheckContext (the parsed arguments plus the
declared objects) and returns a result: an Expr, an operator, a tuple of
either, a dict of labelled results, or None for operations that certify
their input by raising on failure. The runner turns the result into a
pass/fail verdict according to the check's `expect=`.
"""

import logging
import random
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Mapping, Optional, Tuple

import sympy as sp

import samples
from charts import Diffeomorphism, jacobian
from connections import (
    VolConnection,
    cocycle_check,
    connection_from_volume_form,
    groupoid_residual,
    line_family_covector,
    volume_form_transform_check,
)
from densities import Density, TensorDensity, as_weight
from diffops import (
    DensOperator,
    ExtVectorField,
    adjoint,
    apply,
    boundary_residual,
    compose,
    decompose_self_adjoint,
    divergence,
    integrand_boundary_term,
    lie_derivative,
    lie_field,
    parse_operator,
    transform_operator,
    vertical_projection,
)
from errors import ChartMismatchError, DensopsError, UsageError
from expr_parser import FUNCTIONS, names_in, parse_ast
from odd_symplectic import (
    bracket_matrix,
    bv_identity_check,
    bv_laplacian,
    canonical_half_density_operator,
    check_darboux,
    check_symplectic,
    coordinate_bv,
    darboux_flat_check,
    darboux_tensor,
    derived_bracket,
    identity_simple_check,
    jacobi_obstruction,
    jacobi_residual,
    volume_arrow_check,
)
from pencils import (
    FixedWeightOperator,
    PencilSpec,
    build_pencil,
    singular_split,
    delta_sing,
    extract_spec,
    function_operator_connection,
    nondegenerate_split,
    pencil_through,
    phi_iso,
    phi_iso_via_pencil,
    restrict,
    symmetrized_lie_pencil,
    transform_spec,
)
from riemann_line import (
    Metric,
    laplace_beltrami,
    laplace_beltrami_on_densities,
    levi_civita_via_christoffel,
    levi_civita_volume_connection,
    line_cocycle,
    line_cocycle_defect,
    line_cocycle_schwarzian_check,
    line_tensor,
    riemannian_spec,
    schwarzian,
    schwarzian_chain_rule,
    sturm_operator,
)
from symexpr import Chart, Expr, Parity, parse

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Operation:
    name: str
    func: Callable[["CheckContext"], object]
    required: Tuple[str, ...]
    summary: str


OPERATIONS: Dict[str, Operation] = {}


def operation(name: str, *required: str):
    """Register a check operation under `name` with its required arguments."""

    def register(func):
        doc = (func.__doc__ or "").strip().splitlines()
        OPERATIONS[name] = Operation(name, func, tuple(required), doc[0] if doc else "")
        return func

    return register


def split_list(text: str, separator: str = ",") -> List[str]:
    """Split on separators outside parentheses."""
    items, depth, current = [], 0, []
    for char in text:
        if char == "(":
            depth += 1
        elif char == ")":
            depth -= 1
        if char == separator and depth == 0:
            items.append("".join(current).strip())
            current = []
        else:
            current.append(char)
    tail = "".join(current).strip()
    if tail or items:
        items.append(tail)
    return items


class CheckContext:
    """Arguments of one check, resolved against the declared objects."""

    def __init__(self, namespace: Mapping[str, object], args: Mapping[str, str], rng: random.Random, seed: int):
        self.namespace = namespace
        self.args = dict(args)
        self.rng = rng
        self.seed = seed

    # -- raw access ---------------------------------------------------------------
    def has(self, key: str) -> bool:
        return key in self.args

    def raw(self, key: str, default: Optional[str] = None) -> Optional[str]:
        return self.args.get(key, default)

    def require(self, key: str) -> str:
        if key not in self.args:
            raise UsageError(f"Missing argument '{key}'")
        return self.args[key]

    def declared(self, key: str, kind: type = object):
        """The declared object named by argument `key`, or None for inline text."""
        value = self.args.get(key)
        if value is None or value not in self.namespace:
            return None
        obj = self.namespace[value]
        if not isinstance(obj, kind):
            raise UsageError(f"'{value}' is a {type(obj).__name__}, expected {kind.__name__}")
        return obj

    def integer(self, key: str, default: int) -> int:
        value = self.args.get(key)
        if value is None:
            return default
        try:
            return int(value)
        except ValueError:
            raise UsageError(f"Argument {key}={value} is not an integer") from None

    def weight(self, key: str, default=0) -> sp.Expr:
        value = self.args.get(key)
        return as_weight(default if value is None else value)

    # -- charts -------------------------------------------------------------------
    def chart(self, key: str = "chart") -> Chart:
        if key in self.args:
            chart = self.namespace.get(self.args[key])
            if not isinstance(chart, Chart):
                raise UsageError(f"'{self.args[key]}' is not a declared chart")
            return chart
        for value in self.args.values():
            obj = self.namespace.get(value)
            found = getattr(obj, "chart", None) or getattr(obj, "source", None)
            if isinstance(found, Chart):
                return found
        raise UsageError("No chart given (use chart=NAME)")

    def line_expr(self, key: str) -> Expr:
        """An expression in one letter; other identifiers become parameters of an implicit line chart."""
        obj = self.declared(key, Expr)
        if obj is not None:
            return obj
        text = self.require(key)
        names = [n for n in names_in(parse_ast(text)) if n not in FUNCTIONS]
        letter = self.raw("variable") or ("y" if "y" in names or not names else names[0])
        params = [n for n in names if n != letter]
        return parse(text, Chart("line", [letter], params=params))

    # -- typed arguments ------------------------------------------------------------
    def expr(self, key: str, chart: Optional[Chart] = None) -> Expr:
        obj = self.declared(key)
        if isinstance(obj, Expr):
            return obj
        if isinstance(obj, Density):
            return obj.coefficient
        if obj is not None:
            raise UsageError(f"'{self.args[key]}' is not an expression")
        return parse(self.require(key), chart or self.chart())

    def exprs(self, key: str, chart: Optional[Chart] = None) -> Tuple[Expr, ...]:
        obj = self.declared(key)
        if isinstance(obj, tuple):
            return obj
        if isinstance(obj, VolConnection):
            return obj.components
        if obj is not None:
            raise UsageError(f"'{self.args[key]}' is not a list of expressions")
        chart = chart or self.chart()
        items = split_list(self.require(key))
        if len(items) == 1 and items[0] == "0":
            return tuple(Expr.zero(chart) for _ in chart.variables)
        return tuple(parse(item, chart) for item in items)

    def operator(self, key: str = "op") -> DensOperator:
        obj = self.declared(key)
        if isinstance(obj, DensOperator):
            return obj
        if isinstance(obj, FixedWeightOperator):
            return obj.lift()
        if obj is not None:
            raise UsageError(f"'{self.args[key]}' is not an operator")
        return parse_operator(self.require(key), self.chart(), self.weight("weight"))

    def fixed_operator(self, key: str = "op") -> FixedWeightOperator:
        obj = self.declared(key)
        if isinstance(obj, FixedWeightOperator) and not self.has("lam"):
            return obj
        if isinstance(obj, FixedWeightOperator):
            return restrict(obj.lift(), self.weight("lam"))
        return restrict(self.operator(key), self.weight("lam"))

    def density(self, key: str) -> Density:
        obj = self.declared(key, Density)
        if obj is not None:
            return obj
        return Density.single(parse(self.require(key), self.chart()), self.weight(key + "_weight"))

    def volume(self, key: str = "rho", chart: Optional[Chart] = None) -> Expr:
        obj = self.declared(key)
        if isinstance(obj, Density):
            return obj.coefficient
        if isinstance(obj, Expr):
            return obj
        return parse(self.raw(key) or "1", chart or self.chart())

    def tensor(self, key: str = "S") -> TensorDensity:
        obj = self.declared(key, TensorDensity)
        if obj is not None:
            return obj
        chart = self.chart()
        text = self.require(key)
        if text == "darboux":
            return darboux_tensor(chart)
        rows = [split_list(row) for row in split_list(text, ";")]
        return TensorDensity.from_rows(chart, self.weight("weight"), rows)

    def connection(self, key: str = "gamma", chart: Optional[Chart] = None) -> VolConnection:
        obj = self.declared(key)
        if isinstance(obj, VolConnection):
            return obj
        if isinstance(obj, Density):
            return connection_from_volume_form(obj)
        chart = chart or self.chart()
        return VolConnection(chart, self.exprs(key, chart))

    def diffeo(self, key: str) -> Diffeomorphism:
        obj = self.declared(key, Diffeomorphism)
        if obj is None:
            raise UsageError(f"Argument {key} must name a declared diffeo")
        return obj

    def metric(self, key: str = "metric") -> Metric:
        obj = self.declared(key, Metric)
        if obj is None:
            raise UsageError(f"Argument {key} must name a declared metric")
        return obj

    def spec(self, key: str = "spec") -> PencilSpec:
        obj = self.declared(key, PencilSpec)
        if obj is None:
            raise UsageError(f"Argument {key} must name a declared spec")
        return obj

    def vector_field(self) -> ExtVectorField:
        chart = self.chart()
        components = self.exprs("components", chart)
        vertical = self.expr("vertical", chart) if self.has("vertical") else None
        return ExtVectorField(chart, self.weight("weight"), components, vertical)


# -- result handling ----------------------------------------------------------------------

def residuals(result, label: str = "") -> Iterator[Tuple[str, Expr]]:
    """Flatten a result into labelled scalar expressions."""
    if result is None:
        return
    if isinstance(result, Expr):
        yield label, result
    elif isinstance(result, dict):
        for key, value in result.items():
            yield from residuals(value, f"{label} {key}".strip())
    elif isinstance(result, (tuple, list)):
        for i, value in enumerate(result):
            yield from residuals(value, f"{label}[{i}]")
    elif isinstance(result, DensOperator):
        for (k, alpha), c in result.terms():
            yield f"{label} lam^{k} d{alpha}".strip(), c
    elif isinstance(result, FixedWeightOperator):
        for alpha, c in result.terms():
            yield f"{label} d{alpha}".strip(), c
    elif isinstance(result, Density):
        for weight, c in result.components():
            yield f"{label} t^{weight}".strip(), c
    elif isinstance(result, VolConnection):
        yield from residuals(result.components, label)
    elif isinstance(result, PencilSpec):
        yield from residuals([list(row) for row in result.S.matrix], f"{label} S".strip())
        yield from residuals(result.gamma, f"{label} gamma".strip())
        yield from residuals(result.theta, f"{label} theta".strip())
    else:
        raise DensopsError(f"Cannot compare a result of type {type(result).__name__}")


def describe(result) -> str:
    if result is None:
        return "certified"
    if hasattr(result, "to_text"):
        return result.to_text()
    if isinstance(result, (tuple, list)):
        return "(" + ", ".join(describe(r) for r in result) + ")"
    if isinstance(result, dict):
        return f"{len(result)} samples"
    return str(result)


def spec_difference(a: PencilSpec, b: PencilSpec) -> Tuple[Expr, ...]:
    if a.chart != b.chart:
        raise ChartMismatchError("Pencils on different charts")
    if sp.simplify(a.weight - b.weight) != 0:
        raise DensopsError(f"Pencils of weights {a.weight} and {b.weight}")
    differences = [x - y for row_a, row_b in zip(a.S.matrix, b.S.matrix) for x, y in zip(row_a, row_b)]
    differences += [x - y for x, y in zip(a.gamma, b.gamma)]
    differences.append(a.theta - b.theta)
    return tuple(differences)


def difference(result, expected):
    """result − expected for results of matching type."""
    if isinstance(result, PencilSpec):
        return spec_difference(result, expected)
    if isinstance(result, (tuple, list)):
        if len(result) != len(expected):
            raise DensopsError(f"Expected {len(expected)} values, got {len(result)}")
        return tuple(difference(r, e) for r, e in zip(result, expected))
    if isinstance(result, VolConnection):
        return result.difference(expected)
    return result - expected


def expected_value(ctx: CheckContext, result):
    """Read `value=` in the shape of `result`: a declared name or text."""
    text = ctx.require("value")
    if text in ctx.namespace:
        return ctx.namespace[text]
    if isinstance(result, Expr):
        return parse(text, result.chart)
    if isinstance(result, DensOperator):
        return parse_operator(text, result.chart, result.weight)
    if isinstance(result, FixedWeightOperator):
        return restrict(parse_operator(text, result.chart, result.weight), result.lam)
    if isinstance(result, Density):
        return Density.single(parse(text, result.chart), result.weight)
    if isinstance(result, VolConnection):
        return VolConnection(result.chart, [parse(item, result.chart) for item in split_list(text)])
    if isinstance(result, (tuple, list)) and result and isinstance(result[0], Expr):
        return tuple(parse(item, result[0].chart) for item in split_list(text))
    raise DensopsError(f"Cannot read value= for a result of type {type(result).__name__}")


# -- expressions and densities -----------------------------------------------------------------

@operation("expr", "expr")
def op_expr(ctx):
    """An expression, for zero/nonzero/equal checks."""
    return ctx.expr("expr")


@operation("apply", "op", "density")
def op_apply(ctx):
    """Apply an operator to a density."""
    return apply(ctx.operator("op"), ctx.density("density"))


@operation("berezinian", "diffeo")
def op_berezinian(ctx):
    """Jacobian determinant or Berezinian of a diffeo."""
    return jacobian(ctx.diffeo("diffeo")).J


@operation("volume-transform", "density", "diffeo")
def op_volume_transform(ctx):
    """Connection of a transformed volume form against the transformed connection."""
    return volume_form_transform_check(ctx.density("density"), ctx.diffeo("diffeo"))


# -- operators ------------------------------------------------------------------------

@operation("adjoint", "op")
def op_adjoint(ctx):
    """The formal adjoint."""
    return adjoint(ctx.operator("op"))


@operation("compose", "a", "b")
def op_compose(ctx):
    """a∘b in normal form."""
    return compose(ctx.operator("a"), ctx.operator("b"))


@operation("involution", "op")
def op_involution(ctx):
    """(L⁺)⁺ − L."""
    op = ctx.operator("op")
    return adjoint(adjoint(op)) - op


def _koszul_residual(a: DensOperator, b: DensOperator) -> DensOperator:
    sign = -1 if (a.parity is Parity.ODD and b.parity is Parity.ODD) else 1
    return adjoint(compose(a, b)) - compose(adjoint(b), adjoint(a)) * sign


@operation("antihom", "a", "b")
def op_antihom(ctx):
    """(AB)⁺ − (−1)^{p(A)p(B)} B⁺A⁺."""
    return _koszul_residual(ctx.operator("a"), ctx.operator("b"))


@operation("selfadjoint", "op")
def op_selfadjoint(ctx):
    """L⁺ − L."""
    op = ctx.operator("op")
    return adjoint(op) - op


@operation("decompose", "op")
def op_decompose(ctx):
    """The self-adjoint (part=self) or anti-self-adjoint (part=anti) part."""
    sa, anti = decompose_self_adjoint(ctx.operator("op"))
    part = ctx.raw("part", "self")
    if part not in ("self", "anti"):
        raise UsageError(f"part must be self or anti, got {part}")
    return sa if part == "self" else anti


@operation("boundary", "op", "a", "b")
def op_boundary(ctx):
    """Residual of the integration-by-parts certificate."""
    op, a, b = ctx.operator("op"), ctx.density("a"), ctx.density("b")
    return boundary_residual(op, a, b, integrand_boundary_term(op, a, b))


@operation("divergence", "components")
def op_divergence(ctx):
    """Canonical divergence of t^δ(X^A∂_A + X⁰λ̂)."""
    return divergence(ctx.vector_field())


@operation("lie", "components")
def op_lie(ctx):
    """Generalized Lie derivative of weight δ."""
    chart = ctx.chart()
    return lie_derivative(chart, ctx.exprs("components", chart), ctx.weight("weight"))


@operation("lie-divergence", "components")
def op_lie_divergence(ctx):
    """Divergence of the Lie field; zero."""
    chart = ctx.chart()
    return divergence(lie_field(chart, ctx.exprs("components", chart), ctx.weight("weight")))


@operation("projection-split", "components")
def op_projection_split(ctx):
    """(X − ΠX) − L_{pX}; zero."""
    field = ctx.vector_field()
    rest = (field - vertical_projection(field)).as_operator()
    return rest - lie_derivative(field.chart, field.components, field.weight)


@operation("projection", "components")
def op_projection(ctx):
    """ΠX as an operator."""
    return vertical_projection(ctx.vector_field()).as_operator()


# -- pencils --------------------------------------------------------------------------

@operation("pencil", "spec")
def op_pencil(ctx):
    """The canonical operator of a spec, restricted to lam= when given."""
    op = build_pencil(ctx.spec("spec"))
    return restrict(op, ctx.weight("lam")) if ctx.has("lam") else op


@operation("restrict", "op", "lam")
def op_restrict(ctx):
    """Restriction to F_lam."""
    return ctx.fixed_operator("op")


@operation("extract", "op")
def op_extract(ctx):
    """(S, γ, θ) of a self-adjoint normalized operator."""
    return extract_spec(ctx.operator("op"))


@operation("roundtrip", "spec")
def op_roundtrip(ctx):
    """extract(build(spec)) − spec."""
    spec = ctx.spec("spec")
    return spec_difference(extract_spec(build_pencil(spec)), spec)


@operation("pencil_through", "op")
def op_pencil_through(ctx):
    """Rebuild an operator on F_lam from its unique pencil; zero residual."""
    op = ctx.fixed_operator("op")
    return restrict(build_pencil(pencil_through(op)), op.lam) - op


@operation("phi", "op", "mu")
def op_phi(ctx):
    """The equivariant isomorphism D_λ → D_μ against the pencil route."""
    op = ctx.fixed_operator("op")
    mu = ctx.weight("mu")
    return phi_iso(op, mu) - phi_iso_via_pencil(op, mu)


@operation("phi_map", "op", "mu")
def op_phi_map(ctx):
    """The image of the isomorphism D_λ → D_μ."""
    return phi_iso(ctx.fixed_operator("op"), ctx.weight("mu"))


@operation("laws", "spec", "diffeo")
def op_laws(ctx):
    """Transformation laws of (S, γ, θ) against extraction from the transformed operator."""
    spec, phi = ctx.spec("spec"), ctx.diffeo("diffeo")
    via_operator = extract_spec(transform_operator(build_pencil(spec), phi))
    return spec_difference(transform_spec(spec, phi), via_operator)


@operation("transform", "op", "diffeo")
def op_transform(ctx):
    """The operator written in the target chart."""
    return transform_operator(ctx.operator("op"), ctx.diffeo("diffeo"))


@operation("delta-sing", "S", "gamma")
def op_delta_sing(ctx):
    """The singular-weight operator of a connection."""
    S = ctx.tensor("S")
    return delta_sing(S, ctx.connection("gamma", S.chart).components)


@operation("singular-difference", "S", "gamma", "X")
def op_singular_difference(ctx):
    """Δ_sing(γ+X) − Δ_sing(γ) − ((1−δ)/4)·residual; zero."""
    S = ctx.tensor("S")
    gamma = ctx.connection("gamma", S.chart)
    X = ctx.exprs("X", S.chart)
    change = delta_sing(S, gamma.shifted(X).components) - delta_sing(S, gamma.components)
    scalar = groupoid_residual(S, gamma, X) * ((1 - S.weight) / 4)
    zero_alpha = (0,) * len(S.chart.variables)
    return change - FixedWeightOperator(S.chart, change.lam, change.weight, {zero_alpha: scalar})


@operation("singular-split", "op", "gamma")
def op_singular_split(ctx):
    """Split a singular-weight operator as Δ_sing + Lie derivative + scalar; certified."""
    op = ctx.fixed_operator("op")
    singular_split(op, ctx.connection("gamma", op.chart).components)


@operation("nondegenerate", "op")
def op_nondegenerate(ctx):
    """Split a self-adjoint operator with invertible symbol as Δ(S, γ) + λ̂(λ̂+δ−1)F; certified."""
    nondegenerate_split(ctx.operator("op"))


@operation("function-connection", "op")
def op_function_connection(ctx):
    """Upper connection γ^A of an operator on functions."""
    return function_operator_connection(ctx.fixed_operator("op"))


@operation("lie-pencil", "X", "Y")
def op_lie_pencil(ctx):
    """Extracted data of ½(L_XL_Y + L_YL_X) against the closed form."""
    chart = ctx.chart()
    op, spec = symmetrized_lie_pencil(chart, ctx.exprs("X", chart), ctx.exprs("Y", chart))
    return spec_difference(extract_spec(op), spec)


# -- the groupoid -----------------------------------------------------------------------------

@operation("residual", "S", "gamma", "X")
def op_residual(ctx):
    """div_γ(SX) + ((δ−1)/2)X S X; zero iff γ → γ+X is an arrow."""
    S = ctx.tensor("S")
    return groupoid_residual(S, ctx.connection("gamma", S.chart), ctx.exprs("X", S.chart))


@operation("cocycle", "S", "gamma", "X", "Y")
def op_cocycle(ctx):
    """residual(γ, X+Y) − residual(γ, X) − residual(γ+X, Y); zero."""
    S = ctx.tensor("S")
    chart = S.chart
    return cocycle_check(S, ctx.connection("gamma", chart), ctx.exprs("X", chart), ctx.exprs("Y", chart))


@operation("line-family", "param")
def op_line_family(ctx):
    """Residual of γ = 0 → 2/(C + x) on the line with S = 1, δ = 2; zero."""
    chart = ctx.chart()
    return groupoid_residual(line_tensor(chart), VolConnection.zero(chart), line_family_covector(chart, ctx.raw("param")))


# -- Riemannian and line models ---------------------------------------------------------------

@operation("laplace-beltrami", "metric")
def op_laplace_beltrami(ctx):
    """Laplace-Beltrami operator against the pencil restriction at λ = 0."""
    g = ctx.metric("metric")
    rho = ctx.volume("rho", g.chart) if ctx.has("rho") else g.volume()
    return laplace_beltrami(g, rho) - restrict(build_pencil(riemannian_spec(g, rho)), 0)


@operation("laplace-beltrami-densities", "metric", "lam")
def op_laplace_beltrami_densities(ctx):
    """ρ^λΔρ^{−λ} against the pencil restriction at λ."""
    g = ctx.metric("metric")
    rho = ctx.volume("rho", g.chart) if ctx.has("rho") else g.volume()
    lam = ctx.weight("lam")
    return laplace_beltrami_on_densities(g, rho, lam) - restrict(build_pencil(riemannian_spec(g, rho)), lam)


@operation("levi-civita", "metric")
def op_levi_civita(ctx):
    """Christoffel contraction against −∂ log √det g."""
    g = ctx.metric("metric")
    return levi_civita_via_christoffel(g).difference(levi_civita_volume_connection(g))


@operation("schwarzian", "x")
def op_schwarzian(ctx):
    """Schwarzian derivative of x(y)."""
    return schwarzian(ctx.line_expr("x"))


@operation("schwarzian-chain", "f", "g")
def op_schwarzian_chain(ctx):
    """S(f∘g) − (S(f)∘g)g'² − S(g); zero."""
    return schwarzian_chain_rule(ctx.diffeo("f"), ctx.diffeo("g"))


@operation("line-cocycle", "f")
def op_line_cocycle(ctx):
    """c_γ(f) in the target letter (γ = 0 unless gamma= is given)."""
    f = ctx.diffeo("f")
    gamma = ctx.expr("gamma", f.source) if ctx.has("gamma") else Expr.zero(f.source)
    return line_cocycle(gamma, f)


@operation("line-cocycle-law", "f", "g")
def op_line_cocycle_law(ctx):
    """c_γ(f∘g) − c_{T_gγ}(f) − c_γ(g); zero."""
    g = ctx.diffeo("g")
    gamma = ctx.expr("gamma", g.source) if ctx.has("gamma") else Expr.zero(g.source)
    return line_cocycle_defect(gamma, ctx.diffeo("f"), g)


@operation("line-cocycle-schwarzian", "f")
def op_line_cocycle_schwarzian(ctx):
    """c_0(f) − ¼S(x(y)); zero."""
    return line_cocycle_schwarzian_check(ctx.diffeo("f"))


@operation("sturm", "gamma")
def op_sturm(ctx):
    """The Sturm-Liouville operator ½∂² + U of a line connection."""
    return sturm_operator(ctx.line_expr("gamma"))


# -- odd symplectic ----------------------------------------------------------------------------

def _odd_tensor(ctx) -> TensorDensity:
    return ctx.tensor("S") if ctx.has("S") else darboux_tensor(ctx.chart())


@operation("bv-bracket", "f", "g")
def op_bv_bracket(ctx):
    """The derived bracket {f, g}."""
    S = _odd_tensor(ctx)
    return derived_bracket(S, ctx.expr("f", S.chart), ctx.expr("g", S.chart))


@operation("bv-brackets")
def op_bv_brackets(ctx):
    """Matrix of brackets of the coordinates."""
    S = _odd_tensor(ctx)
    return bracket_matrix(S, [Expr.var(S.chart, v.name) for v in S.chart.variables])


@operation("bv-darboux")
def op_bv_darboux(ctx):
    """Certify {x^a, θ_b} = δ^a_b."""
    check_darboux(_odd_tensor(ctx))


@operation("bv-jacobi")
def op_bv_jacobi(ctx):
    """(H, H) of the master Hamiltonian."""
    return jacobi_obstruction(_odd_tensor(ctx))


@operation("bv-jacobi-residual", "f", "g", "h")
def op_bv_jacobi_residual(ctx):
    """Cyclic Jacobi residual of three functions."""
    S = _odd_tensor(ctx)
    chart = S.chart
    return jacobi_residual(S, ctx.expr("f", chart), ctx.expr("g", chart), ctx.expr("h", chart))


@operation("bv-square")
def op_bv_square(ctx):
    """Δ∘Δ of the canonical BV operator; zero."""
    delta = canonical_half_density_operator(_odd_tensor(ctx))
    return compose(delta, delta)


@operation("bv-selfadjoint")
def op_bv_selfadjoint(ctx):
    """Δ⁺ − Δ of the canonical BV operator; zero."""
    delta = canonical_half_density_operator(_odd_tensor(ctx))
    return adjoint(delta) - delta


@operation("bv-laplacian", "f")
def op_bv_laplacian(ctx):
    """Δ_ρ f (ρ = 1 unless rho= is given)."""
    S = _odd_tensor(ctx)
    return bv_laplacian(ctx.volume("rho", S.chart), S, ctx.expr("f", S.chart))


@operation("bv-coordinate", "f")
def op_bv_coordinate(ctx):
    """Δ_1 f − ∂²f/∂x^a∂θ_a for a Darboux tensor; zero."""
    S = _odd_tensor(ctx)
    f = ctx.expr("f", S.chart)
    return bv_laplacian(Expr.one(S.chart), S, f) - coordinate_bv(f)


@operation("bv-identity", "diffeo")
def op_bv_identity(ctx):
    """J^{−1/2}Δ(J^{1/2}) for a symplectomorphism; zero."""
    return bv_identity_check(ctx.diffeo("diffeo"))


@operation("bv-symplectic", "diffeo")
def op_bv_symplectic(ctx):
    """Certify that a diffeo preserves the odd bracket."""
    check_symplectic(ctx.diffeo("diffeo"))


@operation("bv-flat", "diffeo")
def op_bv_flat(ctx):
    """Residual of the arrow between Darboux-flat connections; zero."""
    return darboux_flat_check(ctx.diffeo("diffeo"))


@operation("bv-simple", "F")
def op_bv_simple(ctx):
    """−e^{F/2}Δ_ρe^{−F/2} − ¼·residual(γ_ρ, dF); zero."""
    S = _odd_tensor(ctx)
    return identity_simple_check(ctx.volume("rho", S.chart), ctx.expr("F", S.chart), S)


@operation("bv-volume-arrow", "rho", "rho2")
def op_bv_volume_arrow(ctx):
    """residual(γ_ρ, γ_ρ' − γ_ρ) + 4√(ρ/ρ')Δ_ρ√(ρ'/ρ); zero."""
    S = _odd_tensor(ctx)
    return volume_arrow_check(ctx.volume("rho", S.chart), ctx.volume("rho2", S.chart), S)


# -- sampled suites -----------------------------------------------------------------------------

def _random_parity(ctx, chart: Chart) -> Parity:
    return Parity(ctx.rng.randint(0, 1)) if chart.is_super else Parity.EVEN


@operation("sample-adjoint")
def op_sample_adjoint(ctx):
    """Involution and Koszul anti-homomorphism on `count` random operator pairs."""
    chart = ctx.chart()
    results = {}
    for i in range(ctx.integer("count", 100)):
        weight = ctx.rng.choice((0, 0, sp.Rational(1, 2), 2))
        a = samples.random_operator(ctx.rng, chart, _random_parity(ctx, chart), weight=weight)
        b = samples.random_operator(ctx.rng, chart, _random_parity(ctx, chart))
        results[f"involution#{i}"] = adjoint(adjoint(a)) - a
        results[f"antihom#{i}"] = _koszul_residual(a, b)
    return results


@operation("sample-boundary")
def op_sample_boundary(ctx):
    """Boundary-term certificates for `count` random (L, a, b)."""
    chart = ctx.chart()
    results = {}
    for i in range(ctx.integer("count", 50)):
        weight = ctx.rng.choice((0, 0, 1, 2))
        op = samples.random_operator(ctx.rng, chart, _random_parity(ctx, chart), weight=weight)
        lam = samples.random_weight(ctx.rng)
        a = samples.random_density(ctx.rng, chart, lam, _random_parity(ctx, chart))
        b = samples.random_density(ctx.rng, chart, 1 - lam - weight, _random_parity(ctx, chart))
        results[f"#{i}"] = boundary_residual(op, a, b, integrand_boundary_term(op, a, b))
    return results


@operation("sample-roundtrip")
def op_sample_roundtrip(ctx):
    """extract(build(spec)) = spec for `count` random specs."""
    chart = ctx.chart()
    results = {}
    for i in range(ctx.integer("count", 100)):
        weight = ctx.weight("weight") if ctx.has("weight") else ctx.rng.choice((0, 1, 2, sp.Rational(1, 2)))
        spec = samples.random_spec(ctx.rng, chart, weight)
        results[f"#{i}"] = spec_difference(extract_spec(build_pencil(spec)), spec)
    return results


@operation("sample-laws")
def op_sample_laws(ctx):
    """Transformation laws of (S, gamma, theta) under `count` random triangular diffeos."""
    chart = ctx.chart()
    target = Chart(chart.name + "_new", [v.name + "n" for v in chart.even], params=chart.params)
    results = {}
    for i in range(ctx.integer("count", 10)):
        weight = ctx.rng.choice((0, 2, sp.Rational(1, 2), sp.Rational(1, 3)))
        spec = samples.random_spec(ctx.rng, chart, weight)
        phi = samples.triangular_diffeo(ctx.rng, chart, target)
        via_operator = extract_spec(transform_operator(build_pencil(spec), phi))
        results[f"#{i}"] = spec_difference(transform_spec(spec, phi), via_operator)
    return results


@operation("sample-phi")
def op_sample_phi(ctx):
    """The isomorphism against the pencil route for `count` operators over `pairs` weight pairs."""
    chart = ctx.chart()
    pairs = samples.random_weight_pairs(ctx.rng, ctx.integer("pairs", 5))
    results = {}
    for i in range(ctx.integer("count", 50)):
        lam, mu = pairs[i % len(pairs)]
        op = restrict(samples.random_operator(ctx.rng, chart, Parity.EVEN, terms=5), lam)
        results[f"#{i} {lam}->{mu}"] = phi_iso(op, mu) - phi_iso_via_pencil(op, mu)
    return results


@operation("sample-cocycle")
def op_sample_cocycle(ctx):
    """Cocycle identity for `count` random (S, γ, X, Y)."""
    chart = ctx.chart()
    parity = Parity.ODD if ctx.raw("parity") == "odd" else Parity.EVEN
    results = {}
    for i in range(ctx.integer("count", 10)):
        weight = ctx.weight("weight") if ctx.has("weight") else ctx.rng.choice((0, 2, sp.Rational(1, 2)))
        S = samples.random_tensor(ctx.rng, chart, weight, parity)
        gamma = VolConnection(chart, samples.random_covector(ctx.rng, chart))
        X = samples.random_covector(ctx.rng, chart)
        Y = samples.random_covector(ctx.rng, chart)
        results[f"#{i}"] = cocycle_check(S, gamma, X, Y)
    return results


@operation("sample-schwarzian")
def op_sample_schwarzian(ctx):
    """Chain rule of the Schwarzian and the line cocycle law on `count` composed pairs."""
    charts = samples.line_charts(3)
    results = {}
    for i in range(ctx.integer("count", 5)):
        f, g = samples.random_line_pair(ctx.rng, charts)
        gamma = samples.random_function(ctx.rng, charts[0], degree=1, terms=2)
        results[f"chain#{i} {f.name}.{g.name}"] = schwarzian_chain_rule(f, g)
        results[f"cocycle#{i} {f.name}.{g.name}"] = line_cocycle_defect(gamma, f, g)
        results[f"schwarzian#{i} {g.name}"] = line_cocycle_schwarzian_check(g)
    return results


@operation("sample-bv-simple")
def op_sample_bv_simple(ctx):
    """The simple identity for `count` random even F and volume forms in 2|2."""
    chart = samples.darboux_chart("D", 2)
    S = darboux_tensor(chart)
    results = {}
    for i in range(ctx.integer("count", 20)):
        rho = samples.random_volume(ctx.rng, chart)
        if ctx.rng.random() < 0.5:
            rho = rho + parse("x1*th1*th2", chart) * samples.random_rational(ctx.rng)
        F = samples.random_even_function(ctx.rng, chart)
        results[f"#{i}"] = identity_simple_check(rho, F, S)
    return results


@operation("sample-bv-identity")
def op_sample_bv_identity(ctx):
    """The BV identity and the Darboux-flat arrow for `count` composed symplectomorphisms."""
    results = {}
    mixing = ctx.raw("mixing", "no") == "yes"
    for i in range(ctx.integer("count", 10)):
        if mixing:
            phi = samples.random_mixing_symplectomorphism(ctx.rng)
        else:
            phi = samples.random_composed_symplectomorphism(ctx.rng, 2, steps=2)
        results[f"identity#{i}"] = bv_identity_check(phi)
        results[f"flat#{i}"] = darboux_flat_check(phi)
    return results


@operation("sample-riemann")
def op_sample_riemann(ctx):
    """Laplace-Beltrami and Levi-Civita consistency for `count` random metrics."""
    chart = ctx.chart()
    results = {}
    for i in range(ctx.integer("count", 5)):
        g = samples.random_metric(ctx.rng, chart)
        rho = samples.random_volume(ctx.rng, chart)
        spec = riemannian_spec(g, rho)
        lam = samples.random_weight(ctx.rng)
        results[f"laplace#{i}"] = laplace_beltrami(g, rho) - restrict(build_pencil(spec), 0)
        results[f"densities#{i}"] = laplace_beltrami_on_densities(g, rho, lam) - restrict(build_pencil(spec), lam)
        results[f"levi-civita#{i}"] = levi_civita_via_christoffel(g).difference(levi_civita_volume_connection(g))
    return results


def operation_names() -> List[str]:
    return sorted(OPERATIONS)