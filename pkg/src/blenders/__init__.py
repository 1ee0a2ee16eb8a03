"""Blenders of cu-Henon-like maps and their renormalization from a cycle.

Modules
-------
geom_core      outward-rounded intervals, cones and box subdivision
henon_family   the maps, their Jacobians and the fixed point P*
blender_cert   interval certification of the blender conditions
model_cycle    chart-wise model of the non-transverse cycle
param_search   eigenvalue region and neutral pairs
renorm         renormalized return maps and their limit
connect        perturbation experiment linking the blender to Q
cli            command-line entry point
"""

__version__ = "0.1.0"
