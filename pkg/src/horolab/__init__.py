"""horolab: horofunction block coding, transfer-matrix spectra, and
spherical-average experiments on word-hyperbolic group families."""

from .groups import (
    GeneratorSet,
    GroupSpec,
    SphereIndex,
    free_group,
    free_product_of_cyclics,
)
from .horofn import (
    Block,
    HorofunctionPatch,
    Ray,
    adaptive_block_parameters,
    block_of,
    busemann_patch,
    child_blocks,
    determinism_test,
    parent_at,
    parent_horofunction,
    periodic_ray,
    ray_from_text,
    sample_rays,
)
from .blockgraph import (
    AdjacencyMatrix,
    BlockGraph,
    coding_injectivity_test,
    default_block_graph,
    enumerate_blocks,
    path_coding,
)
from .spectral import (
    DensityVector,
    GrowthData,
    alpha_presolve,
    alpha_shift,
    density_recursion_check,
    empirical_block_densities,
    find_period,
    generation_growth_check,
    growth_data,
    mtp_check,
    perron,
    quasiconformal_check_tree,
    tail_mass_check,
)
from .actions import (
    FiniteAction,
    FiniteQuotient,
    Transversal,
    ball_average,
    convergence_experiment,
    joint_empirical,
    left_translation_action,
    make_transversal,
    parity_quotient_config,
    spherical_average,
)

__version__ = "0.1.0"

__all__ = [
    "AdjacencyMatrix",
    "Block",
    "BlockGraph",
    "DensityVector",
    "FiniteAction",
    "FiniteQuotient",
    "GeneratorSet",
    "GroupSpec",
    "GrowthData",
    "HorofunctionPatch",
    "Ray",
    "SphereIndex",
    "Transversal",
    "adaptive_block_parameters",
    "alpha_presolve",
    "alpha_shift",
    "ball_average",
    "block_of",
    "busemann_patch",
    "child_blocks",
    "coding_injectivity_test",
    "convergence_experiment",
    "default_block_graph",
    "density_recursion_check",
    "determinism_test",
    "empirical_block_densities",
    "enumerate_blocks",
    "find_period",
    "free_group",
    "free_product_of_cyclics",
    "generation_growth_check",
    "growth_data",
    "joint_empirical",
    "left_translation_action",
    "make_transversal",
    "mtp_check",
    "parent_at",
    "parent_horofunction",
    "parity_quotient_config",
    "path_coding",
    "periodic_ray",
    "perron",
    "quasiconformal_check_tree",
    "ray_from_text",
    "sample_rays",
    "spherical_average",
    "tail_mass_check",
]
