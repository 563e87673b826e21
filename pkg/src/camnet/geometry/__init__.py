from .bvh import Bvh, build_bvh, ray_intersect, ray_intersect_brute
from .io import MeshLoadError, load_mesh, save_obj, save_ply, save_stl
from .mesh import Aabb, TriangleMesh

__all__ = [
    "Aabb",
    "Bvh",
    "MeshLoadError",
    "TriangleMesh",
    "build_bvh",
    "load_mesh",
    "ray_intersect",
    "ray_intersect_brute",
    "save_obj",
    "save_ply",
    "save_stl",
]
