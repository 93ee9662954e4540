"""Section algebras of Fell bundles over finite groupoids."""
from .algebra import (
    NegligibleSet,
    cstar_suite,
    diagonal_unit,
    essential_seminorm,
    multiplier_norm_check,
    singular_membership,
)
from .bundle import FiberElement, MatrixBundle, TwistedLineBundle, fiber_product, fiber_star, validate_fell
from .groupoid import (
    Groupoid,
    action_groupoid,
    cyclic_group,
    direct_product,
    disjoint_union,
    from_group,
    generated_subgroupoid,
    is_slice,
    pair_groupoid,
    saturation_split,
    set_product,
    validate,
)
from .linalg import Tolerance, hermitian_eig, loewner_leq, operator_norm, polar_factor, psd_power
from .morphism import (
    FellMorphism,
    GroupoidFunctor,
    algebraize,
    apply_fibre_morphism,
    check_star_bijective,
    compose_fell,
    identity_morphism,
    pullback_bundle,
    pullback_section,
)
from .section import (
    Section,
    convolve,
    diagonal,
    inner_product,
    norm_1,
    norm_2,
    norm_b,
    norm_b_oracle,
    norm_i,
    norm_inf,
    restrict,
    star,
)

__version__ = "0.1.0"
