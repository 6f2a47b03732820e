"""
Odd symplectic geometry on ℝ^{n|n}.

An odd tensor S defines the master Hamiltonian H = ½S^{AB}p_Ap_B on the
cotangent bundle and the odd bracket {f, g} = ((f, H), g). In Darboux
coordinates (x^a, θ_a) the bracket is normalized to {x^a, θ_b} = δ^a_b and
the odd Laplacian of the coordinate volume is ∂²/∂x^a∂θ_a.
"""

import logging
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

import sympy as sp

from charts import Diffeomorphism, compose as compose_maps, jacobian, matrix_inverse, pullback, pushforward
from connections import VolConnection, connection_from_volume_form, div_gamma, groupoid_residual, transform_connection
from densities import Density, TensorDensity
from diffops import DensOperator, compose
from errors import ChartMismatchError, DarbouxError, DegenerateTensorError, DensopsError, NotSymplecticError, ParityError
from symexpr import Chart, Expr, Parity, ZeroStatus, variables_of

logger = logging.getLogger(__name__)

HALF = sp.Rational(1, 2)
MOMENTUM_PREFIX = "p_"


def momentum_chart(base: Chart) -> Chart:
    """T*base: coordinates z^A plus momenta p_A with p(p_A) = p(A)."""
    even = [v.name for v in base.even] + [MOMENTUM_PREFIX + v.name for v in base.even]
    odd = [v.name for v in base.odd] + [MOMENTUM_PREFIX + v.name for v in base.odd]
    return Chart(f"T*{base.name}", even, odd, base.params)


def lift(e: Expr, cotangent: Chart) -> Expr:
    return e.substitute({}, cotangent)


def project(e: Expr, base: Chart) -> Expr:
    """Restrict a function on T*base to the zero section."""
    zero = Expr.zero(base)
    mapping = {v.name: zero for v in e.chart.variables if v.name.startswith(MOMENTUM_PREFIX)}
    return e.substitute(mapping, base)


def canonical_poisson(f: Expr, g: Expr, base: Chart) -> Expr:
    """(f, g) = Σ_A (f∂⃖_{z^A})(∂_{p_A}g) − (−1)^{p(A)}(f∂⃖_{p_A})(∂_{z^A}g)."""
    if f.chart != g.chart:
        raise ChartMismatchError("Bracket of functions on different charts")
    cotangent = f.chart
    if not all(cotangent.has(MOMENTUM_PREFIX + v.name) for v in base.variables):
        raise DensopsError(f"Chart '{cotangent.name}' carries no momenta for '{base.name}'")
    total = Expr.zero(cotangent)
    for variable in base.variables:
        z, p = variable.name, MOMENTUM_PREFIX + variable.name
        total = total + f.right_diff(z) * g.diff(p)
        term = f.right_diff(p) * g.diff(z)
        total = total - term if variable.parity is Parity.EVEN else total + term
    return total


def darboux_tensor(chart: Chart) -> TensorDensity:
    """S^{x_aθ_a} = S^{θ_ax_a} = 1 for a chart with equally many even and odd coordinates."""
    n, m = chart.dimension
    if n != m:
        raise DarbouxError(f"Chart '{chart.name}' of dimension {n}|{m} has no Darboux form")
    zero, one = Expr.zero(chart), Expr.one(chart)
    size = n + m
    matrix = [[zero] * size for _ in range(size)]
    for a in range(n):
        matrix[a][n + a] = one
        matrix[n + a][a] = one
    return TensorDensity(chart, 0, matrix, Parity.ODD)


def _check_odd(S: TensorDensity) -> None:
    if S.parity is not Parity.ODD:
        raise ParityError("Odd Poisson structures need an odd tensor")


@lru_cache(maxsize=64)
def master_hamiltonian(S: TensorDensity) -> Expr:
    """H = ½ S^{AB} p_A p_B on T*M."""
    _check_odd(S)
    cotangent = momentum_chart(S.chart)
    momenta = [Expr.var(cotangent, MOMENTUM_PREFIX + v.name) for v in S.chart.variables]
    total = Expr.zero(cotangent)
    for a in range(S.size):
        for b in range(S.size):
            entry = S.matrix[a][b]
            if not entry.is_zero_form():
                total = total + lift(entry, cotangent) * momenta[a] * momenta[b]
    return total * HALF


def derived_bracket(S: TensorDensity, f: Expr, g: Expr) -> Expr:
    """{f, g} = ((f, H), g)."""
    base = S.chart
    if f.chart != base or g.chart != base:
        raise ChartMismatchError(f"Bracket arguments must live on '{base.name}'")
    H = master_hamiltonian(S)
    cotangent = H.chart
    inner = canonical_poisson(lift(f, cotangent), H, base)
    return project(canonical_poisson(inner, lift(g, cotangent), base), base)


def jacobi_obstruction(S: TensorDensity) -> Expr:
    """(H, H); zero iff the derived bracket satisfies the Jacobi identity."""
    H = master_hamiltonian(S)
    return canonical_poisson(H, H, S.chart)


def _parity(e: Expr) -> int:
    if e.parity is None:
        raise ParityError(f"{e} has no definite parity")
    return int(e.parity)


def jacobi_residual(S: TensorDensity, f: Expr, g: Expr, h: Expr) -> Expr:
    """{f,{g,h}} − {{f,g},h} − (−1)^{(p(f)+1)(p(g)+1)}{g,{f,h}}."""
    sign = (-1) ** ((_parity(f) + 1) * (_parity(g) + 1))
    _parity(h)
    return (
        derived_bracket(S, f, derived_bracket(S, g, h))
        - derived_bracket(S, derived_bracket(S, f, g), h)
        - derived_bracket(S, g, derived_bracket(S, f, h)) * sign
    )


def bracket_matrix(S: TensorDensity, functions: Sequence[Expr]) -> List[List[Expr]]:
    return [[derived_bracket(S, f, g) for g in functions] for f in functions]


def check_darboux(S: TensorDensity) -> None:
    """Certify {x^a, θ_b} = δ^a_b and the vanishing of the other coordinate brackets."""
    chart = S.chart
    n, m = chart.dimension
    if n != m:
        raise DarbouxError(f"Chart '{chart.name}' of dimension {n}|{m} has no Darboux form")
    coordinates = variables_of(chart)
    matrix = bracket_matrix(S, coordinates)
    for a in range(n + m):
        for b in range(n + m):
            expected = 0
            if a < n and b == n + a:
                expected = 1
            elif b < n and a == n + b:
                expected = -1
            if (matrix[a][b] - expected).zero_status() is ZeroStatus.NONZERO:
                raise DarbouxError(
                    f"{{{coordinates[a]}, {coordinates[b]}}} = {matrix[a][b]}, expected {expected}"
                )


def check_nondegenerate(S: TensorDensity) -> None:
    """The even-odd block of S must be invertible."""
    n, m = S.chart.dimension
    if n != m:
        raise DegenerateTensorError(f"Odd tensor on a {n}|{m} chart is degenerate")
    block = sp.Matrix(n, m, lambda a, b: S.matrix[a][n + b].body)
    if sp.simplify(block.det()) == 0:
        raise DegenerateTensorError("Odd tensor is degenerate")


def hamiltonian_field(S: TensorDensity, f: Expr) -> Tuple[Expr, ...]:
    """Components X_f^A = {f, z^A}."""
    return tuple(derived_bracket(S, f, z) for z in variables_of(S.chart))


def bv_laplacian(rho, S: TensorDensity, f: Expr) -> Expr:
    """Δ_ρ f = (−1)^{p(f)} ½ div_ρ X_f, taken part by part; ∂²f/∂x^a∂θ_a for Darboux S and ρ = 1."""
    check_nondegenerate(S)
    gamma = connection_from_volume_form(rho)
    total = Expr.zero(S.chart)
    for parity, part in f.homogeneous_parts():
        value = div_gamma(hamiltonian_field(S, part), gamma, 0) * HALF
        total = total + (value if parity is Parity.EVEN else -value)
    return total


def canonical_half_density_operator(S: TensorDensity) -> DensOperator:
    """Δ = Σ_a ∂²/∂x^a∂θ_a, for a certified Darboux chart."""
    check_darboux(S)
    chart = S.chart
    n = len(chart.even)
    total = DensOperator.zero(chart)
    for a in range(n):
        total = total + compose(
            DensOperator.derivative(chart, chart.even[a].name),
            DensOperator.derivative(chart, chart.odd[a].name),
        )
    return total


def coordinate_bv(f: Expr) -> Expr:
    """∂²f/∂x^a∂θ_a in the chart of f."""
    chart = f.chart
    total = Expr.zero(chart)
    for even, odd in zip(chart.even, chart.odd):
        total = total + f.diff(odd.name).diff(even.name)
    return total


# -- symplectomorphisms ----------------------------------------------------------------

def check_symplectic(phi: Diffeomorphism) -> None:
    """The forward images must satisfy the target's Darboux relations in the source chart."""
    source_S = darboux_tensor(phi.source)
    target_S = darboux_tensor(phi.target)
    check_darboux(source_S)
    expected = bracket_matrix(target_S, variables_of(phi.target))
    images = [phi.forward[v.name] for v in phi.target.variables]
    actual = bracket_matrix(source_S, images)
    for a, row in enumerate(actual):
        for b, value in enumerate(row):
            if (value - pullback(expected[a][b], phi)).zero_status() is ZeroStatus.NONZERO:
                raise NotSymplecticError(
                    f"{phi.name} does not preserve the bracket of "
                    f"{phi.target.variables[a].name}, {phi.target.variables[b].name}"
                )


def bv_identity_check(phi: Diffeomorphism) -> Expr:
    """J^{−1/2} Δ(J^{1/2}) with J = Ber ∂z'/∂z and Δ the Darboux operator of the source."""
    check_symplectic(phi)
    J = jacobian(phi).J
    root = J.sqrt()
    return root.inverse() * coordinate_bv(root)


def identity_simple_check(rho, F: Expr, S: TensorDensity) -> Expr:
    """−e^{F/2}Δ_ρ(e^{−F/2}) − ¼·residual(γ_ρ, dF); identically zero for even F."""
    if F.parity is not Parity.EVEN:
        raise ParityError("The identity is stated for even functions")
    gamma = connection_from_volume_form(rho)
    half_F = F * HALF
    lhs = -(half_F.exp() * bv_laplacian(rho, S, (-half_F).exp()))
    differential = [F.diff(v.name) for v in S.chart.variables]
    return lhs - groupoid_residual(S, gamma, differential) * sp.Rational(1, 4)


def darboux_flat_check(phi: Diffeomorphism) -> Expr:
    """Residual of the arrow between the connections that vanish in the two Darboux charts.

    γ = 0 in the source chart; γ' = 0 in the target chart, carried back to the
    source. The arrow γ → γ' must satisfy div_γX − ½X² = 0.
    """
    check_symplectic(phi)
    S = darboux_tensor(phi.source)
    flat_target = VolConnection.zero(phi.target)
    carried = transform_connection(flat_target, phi.inverted())
    gamma = VolConnection.zero(phi.source)
    return groupoid_residual(S, gamma, gamma.difference(carried))


def volume_arrow_check(rho, rho_prime, S: TensorDensity) -> Expr:
    """residual(γ_ρ, γ_ρ' − γ_ρ) + 4√(ρ/ρ')Δ_ρ√(ρ'/ρ); identically zero."""
    rho = rho.coefficient if isinstance(rho, Density) else rho
    rho_prime = rho_prime.coefficient if isinstance(rho_prime, Density) else rho_prime
    gamma = connection_from_volume_form(rho)
    gamma_prime = connection_from_volume_form(rho_prime)
    ratio = (rho_prime * rho.inverse()).sqrt()
    laplacian = bv_laplacian(rho, S, ratio)
    return groupoid_residual(S, gamma, gamma.difference(gamma_prime)) + ratio.inverse() * laplacian * 4


def point_transformation(base: Diffeomorphism, source: Chart, target: Chart) -> Diffeomorphism:
    """The map of ΠT*M induced by x → x'(x): θ'_{a'} = (∂x^a/∂x^{a'}) θ_a."""
    if [v.name for v in source.even] != [v.name for v in base.source.variables]:
        raise ChartMismatchError("Super chart does not extend the base source chart")
    if [v.name for v in target.even] != [v.name for v in base.target.variables]:
        raise ChartMismatchError("Super chart does not extend the base target chart")
    n = len(source.even)
    M = [[entry.substitute({}, source) for entry in row] for row in jacobian(base).matrix]
    N = matrix_inverse(M)
    M_target = [[pushforward(entry, base).substitute({}, target) for entry in row] for row in jacobian(base).matrix]
    theta = [Expr.var(source, v.name) for v in source.odd]
    theta_prime = [Expr.var(target, v.name) for v in target.odd]
    forward: Dict[str, Expr] = {}
    inverse: Dict[str, Expr] = {}
    for new in target.even:
        forward[new.name] = base.forward[new.name].substitute({}, source)
    for old in source.even:
        inverse[old.name] = base.inverse[old.name].substitute({}, target)
    for a in range(n):
        forward[target.odd[a].name] = sum((N[b][a] * theta[b] for b in range(n)), Expr.zero(source))
        inverse[source.odd[a].name] = sum((M_target[b][a] * theta_prime[b] for b in range(n)), Expr.zero(target))
    return Diffeomorphism(source, target, forward, inverse, name=f"T*{base.name}")


def lagrangian_shift(source: Chart, target: Chart, psi: Expr) -> Diffeomorphism:
    """x'^a = x^a + ∂Ψ/∂θ_a, θ' = θ, for an odd Ψ depending on θ alone."""
    if psi.chart != source:
        raise ChartMismatchError("Generating function must live on the source chart")
    if psi.parity is not Parity.ODD:
        raise ParityError("Generating function must be odd")
    if any(not psi.diff(v.name).is_zero_form() for v in source.even):
        raise DensopsError("Generating function must not depend on even coordinates")
    renaming = {o.name: Expr.var(target, t.name) for o, t in zip(source.variables, target.variables)}
    psi_target = psi.substitute(renaming, target)
    forward: Dict[str, Expr] = {}
    inverse: Dict[str, Expr] = {}
    for (old_x, new_x), (old_t, new_t) in zip(zip(source.even, target.even), zip(source.odd, target.odd)):
        forward[new_x.name] = Expr.var(source, old_x.name) + psi.diff(old_t.name)
        forward[new_t.name] = Expr.var(source, old_t.name)
        inverse[old_x.name] = Expr.var(target, new_x.name) - psi_target.diff(new_t.name)
        inverse[old_t.name] = Expr.var(target, new_t.name)
    return Diffeomorphism(source, target, forward, inverse, name=f"shift({source.name})")


def compose_symplectic(*maps: Diffeomorphism) -> Diffeomorphism:
    """maps[-1] ∘ ... ∘ maps[0]."""
    result = maps[0]
    for step in maps[1:]:
        result = compose_maps(step, result)
    return result
