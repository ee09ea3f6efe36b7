from .graph import average_parameters, build_neighbors, merge_maps, union_buffers

__all__ = ["average_parameters", "build_neighbors", "merge_maps", "union_buffers"]
