from src.geometry.cloud import (
    SurfacePointCloud,
    add_noise,
    read_cloud_csv,
    rotate_embed_4d,
    write_cloud_csv,
)
from src.geometry.projection import (
    projection_apply,
    projection_matrix,
    tangential_hessian_trace,
)
from src.geometry.surfaces import SURFACES, ImplicitSurface, get_surface, sample_isosurface

__all__ = [
    "SURFACES",
    "ImplicitSurface",
    "SurfacePointCloud",
    "add_noise",
    "get_surface",
    "projection_apply",
    "projection_matrix",
    "read_cloud_csv",
    "rotate_embed_4d",
    "sample_isosurface",
    "tangential_hessian_trace",
    "write_cloud_csv",
]
