"""Finite-blocklength regions, corner points, identities and binning simulations
for multiterminal source coding with side information."""
from .probability import (
    Alphabet,
    Channel,
    DistributionError,
    JointPMF,
    attach_channel,
    bernoulli,
    build_joint,
    dsbs,
    iid_extend,
    independent,
    marginalize,
)
from .info import entropy, mutual_information, parse_query
from .region import (
    ConstraintSystem,
    DecoderTable,
    DistortionCriterion,
    ProblemSpec,
    build_region,
    equivalent_form_tpc,
    estimation_region,
    expected_distortion,
    optimal_psi,
    specialize,
)
from .corners import ChainInstance, convex_witness, corner_point, enumerate_corners, membership
from .identities import fuzz_identities, verify_identity
from .typicality import TypicalityParams, fano_check, is_typical, typicality_probability
from .simulate import (
    markov_consistency_check,
    pipeline_simulate,
    sw_simulate,
    wz_stage_simulate,
)

__version__ = "0.1.0"
