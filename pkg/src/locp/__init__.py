"""locp: local completely positive maps on finite flags, with certificates.

Numerically verifiable, desk-scale models of CP/CC maps between
algebras of flag-compatible operators: minimal dilations, their
uniqueness, Radon-Nikodym derivatives, and the Hilbert-module
analogues, each with machine-checkable residual certificates.
"""
from ._kernels import USING_NUMBA
from .algebra import (LocalAlgebra, algebra_from_basis, build_algebra,
                      element, kernel_basis)
from .config import Tolerances, default_tolerances, set_default_tolerances
from .cpmaps import (LocalCPMap, amplify_apply, apply, cp_oracle, dominates,
                     make_map, random_kraus_ops, random_local_cp, schur_map,
                     verify_local_cc, verify_local_cp)
from .flags import (BlockOp, Flag, LocalOrder, check_block_op, flags_equal,
                    local_order, make_flag, seminorm)
from .hilbert_module import (CPInducingMap, HilbertModule, ModuleDilation,
                             ModuleRNResult, build_module,
                             equivalence_partial_isometry,
                             map_from_commutant_pair, make_inducing,
                             module_dilate, module_over_self, module_rn,
                             module_unitary_equivalence, pair_commutant_basis,
                             phi_map_from_kraus, sample_commutant_pair,
                             verify_phi_map)
from .radon_nikodym import (RNCertificate, commutant_basis, derivative,
                            intertwiner, map_from_derivative,
                            sample_contraction_in_commutant)
from .reports import CertificateReport, LevelCheck
from .stinespring import (StinespringRep, dilate_minimal, reconstruct,
                          unitary_equivalence, verify_minimality,
                          verify_perp_identity)

__version__ = "0.1.0"
