"""Vortex-in-cell solver for bi-phase flow two-way coupled with rigid solids."""

from .grid import (GridSpec, ScalarField, VectorField, curl, curvature,
                   divergence, gradient, laplacian, smoothed_heaviside,
                   smoothing_delta)
from .interface import FluidInterface
from .particles import ParticleSet
from .poisson import PoissonPlan, solve_stream, velocity_from_stream
from .rigid import Ball, Box, RigidBody
from .scene_io import SceneConfig, parse_scene
from .solver import SimulationState, check_stability, new_state, run, step

__version__ = "0.1.0"
