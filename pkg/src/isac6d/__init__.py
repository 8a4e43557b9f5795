"""Monostatic MIMO-OFDM sensing: echo synthesis and six-parameter motion recovery."""

from .airlink import (EchoTensor, SymbolFrame, erase_symbols, load_tensor, save_tensor,
                      suppress_clutter, synthesize_echoes, tx_beam)
from .channel import (ChannelMatrix, ClutterModel, Scatterer, SensingScene, clutter_channel,
                      exact_path_channel, factored_channel, fading_factor, sensing_channel)
from .errors import EstimationError, NoTargetError, SingularSubspaceError, UnobservableError
from .geometry import (ArrayGeometry, CartesianPoint, SddPair, SphericalPoint, axis_steering,
                       cartesian_to_spherical, sdd_of, spherical_to_cartesian, upa_steering)
from .kinematics import (OfdmGrid, PlaneCoeffs, TargetState, exact_sdd_at_symbol,
                         first_order_sdd_at_symbol, plane_coeffs_forward, state_at_symbol,
                         virtual_velocity)
from .motion import (Estimate6D, PipelineConfig, VirtualVelocitySample, estimate_6d,
                     estimate_distance, estimate_horizontal, estimate_pitch,
                     estimate_virtual_velocities, fit_plane, recover_velocities)
from .subspace import SpaceValueSet, covariance, esprit_space_values, mdl_order

__version__ = "0.1.0"
