# Distribution pairs and their population quantities
from app.analytic.ground_truth import (
    GroundTruth,
    PlacementMoments,
    bias_DL,
    bias_PM,
    discrete_ground_truth,
)
from app.analytic.distributions import (
    FAMILIES,
    DistributionSpec,
    build_spec,
    dmax_spec,
    exponential_spec,
    normal_spec,
    ordinal5_spec,
    poisson_spec,
    spec_from_config,
)


def ground_truth(spec: DistributionSpec) -> GroundTruth:
    return spec.ground_truth()


__all__ = [
    "FAMILIES",
    "DistributionSpec",
    "GroundTruth",
    "PlacementMoments",
    "bias_DL",
    "bias_PM",
    "build_spec",
    "discrete_ground_truth",
    "dmax_spec",
    "exponential_spec",
    "ground_truth",
    "normal_spec",
    "ordinal5_spec",
    "poisson_spec",
    "spec_from_config",
]
