"""Simulator for dissipatively coupled quantum van der Pol oscillators.

Core layers:

* :mod:`vdpsim.hilbert` — Fock/composite-space operator algebra.
* :mod:`vdpsim.lindblad` — effective master equation, RK4 evolution,
  windowed and direct steady states.
* :mod:`vdpsim.pulses` — stroboscopic sideband circuit on qubit x M1 x M2
  and the pulse-to-rate mapping.
* :mod:`vdpsim.tomography` — characteristic-function readout, Wigner and
  joint-quadrature reconstruction.
* :mod:`vdpsim.syncmetrics` — mutual-information and phase-locking
  synchronization measures.
* :mod:`vdpsim.meanfield` — classical fixed points, stability, Lissajous
  trajectories.
* :mod:`vdpsim.harness` / :mod:`vdpsim.cli` — scenario orchestration,
  sweeps, persistence, command line.
"""

__version__ = "0.1.0"

from .hilbert import (OperatorMatrix, QuantumState, SpaceLayout, annihilation,
                      canonical_state, coherent_state, creation, displacement,
                      embed, expectation, fock_state, mode_annihilation,
                      opposite_coherent_mixture, partial_trace, tensor_states,
                      vacuum_state)
from .lindblad import (EffectiveParams, GeneratorSpec, evolve, generator_apply,
                       recommended_step, single_mode_generator, steady_state,
                       steady_state_direct, steady_state_family,
                       trace_distance, vdp_generator)
from .meanfield import MFState, StabilityResult, fixed_points, integrate_mf, lissajous, mf_rhs, stability
from .pulses import (PulseSchedule, PulseSegment, effective_rates, qubit_reset,
                     rate_report, refine_schedule, run_cycle, run_protocol,
                     segment_hamiltonian, stroboscopic_convergence)
from .syncmetrics import (SyncReport, combined_mi, mutual_information_2d,
                          phase_distribution, resultant_length, von_neumann_mi)
from .tomography import (Grid2D, ReadoutSettings, char_function, donut_radius,
                         joint_distribution, simulate_readout, subtract_offset,
                         wigner, wigner_direct)

__all__ = [name for name in dir() if not name.startswith("_")]
