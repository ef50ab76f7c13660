# Copyright 2026 spinspectra Contributors

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

#      http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

from spinspectra.spin_system import (GAMMA_H, ISOTOPES, DimensionCapError, Isotope, Nucleus,  # noqa
                                     SpectrometerSettings, SpinSystem, active_count, detection_weights,
                                     larmor_frequency)
from spinspectra.operators import ProductBasis, build_hamiltonian, collective_ladder  # noqa
from spinspectra.exact import (StickSpectrum, correlation_time_domain, diagonalize_blocks,  # noqa
                               half_sided_transform, raising_from_transverse, stick_spectrum,
                               transverse_correlations)
from spinspectra.equivalence import detect_equivalence, irrep_decomposition, reduced_spectrum  # noqa
from spinspectra.cluster import assemble_spectrum, build_cluster, importance_metric, spin_resolved_spectrum  # noqa
from spinspectra.analysis import Spectrum, cosine_similarity, equal_area_grid, normalize, sample, to_ppm_axis  # noqa
from spinspectra.solver import exact_spectrum  # noqa
from spinspectra._cli import cli  # noqa
from spinspectra._version import __version__
