"""Image segmentation by relaxing a virtual 3D elastic mesh.

Typical pipeline::

    from elasticmesh import simulate, sign_map, cluster_regions, merge_to_count

    result = simulate(grid)
    labels, n = cluster_regions(sign_map(result.heights))
    merged, plan = merge_to_count(labels, grid, target=20)
"""

__version__ = "0.1.0"

from .baselines import KMeansResult, kmeans_grayscale, split_components
from .errors import (
    CoordinateError,
    ElasticMeshError,
    GridError,
    InstabilityError,
    PgmEncodeError,
    PgmParseError,
)
from .imageio import (
    export_heightmap_csv,
    export_labels_csv,
    export_mesh_obj,
    read_pgm,
    render_labels,
    render_sign_map,
    write_convergence_csv,
    write_pgm,
)
from .merging import MergeEvent, build_adjacency, merge_plan_csv, merge_to_count
from .mesh import (
    ConvergenceTrace,
    ForceSample,
    SimParams,
    SimulationResult,
    as_grid,
    balance_heights,
    check_stability,
    elastic_force,
    fixed_point_residual,
    net_force,
    repulsive_force,
    simulate,
    step,
)
from .segmentation import RegionTable, cluster_regions, region_stats, sign_map
from .testgen import gen_halves, gen_rect, gen_shapes
