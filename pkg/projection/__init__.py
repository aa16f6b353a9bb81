from projection.frames import HoloFrame, holo_frame
from projection.projections import SectionF, decompose, h_F, nabla_F, p, pi, split_hs
from projection.distance import cone_inner_product, geodesic, geodesic_speed, homogeneous_distance

__all__ = [
    "HoloFrame",
    "holo_frame",
    "SectionF",
    "decompose",
    "h_F",
    "nabla_F",
    "p",
    "pi",
    "split_hs",
    "cone_inner_product",
    "geodesic",
    "geodesic_speed",
    "homogeneous_distance",
]
