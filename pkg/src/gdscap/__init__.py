"""Capacity toolkit for generalized direct sum quantum channels."""
from .channel import KrausChannel, apply, choi, complement, is_antidegradable, is_degradable, is_ppt, tensor
from .gds import GdsChannel, build_gds, gds_complement_apply, gds_is_degradable, off_diagonal_choi
from .capacity import (
    Ensemble,
    coherent_information,
    holevo_chi,
    maximize_coherent_information_gds,
    private_information,
)
from .cdc import CdcParams, build_cdc, cdc_bounds, joint_coherent_information
from .witness import check_classical_witness, check_transposition_witness, build_gds_transposition_witness

__version__ = "0.1.0"
