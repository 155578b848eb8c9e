"""Stabilizer-free weak Galerkin finite elements for the biharmonic equation on polygonal meshes."""
