"""Multi-level polar coded modulation on PAM constellations."""

__version__ = "0.1.0"

from .channel import (
    AwgnChannel,
    LevelContext,
    biawgn_capacity,
    bit_llrs,
    esn0_db_to_sigma,
    esn0_to_ebn0_db,
    level_capacities,
    level_capacity,
    level_llr,
    level_llrs,
    total_capacity,
)
from .constellation import (
    Constellation,
    Labeling,
    LabelingFamily,
    apply_labeling,
    canonicalize,
    count_candidates,
    enumerate_canonical_labelings,
    gray_labeling,
    make_pam,
    natural_labeling,
)
from .construction import (
    MlcCodeSpec,
    ReliabilityProfile,
    build_mlc_code,
    design_sigma,
    ga_evolve,
    max_rate_curve,
    reliability_profile,
    surrogate_mean,
)
from .crc import CRC16, CrcConfig, crc_attach, crc_check
from .labelsearch import SearchReport, search_optimal_labeling
from .polar import (
    Decoder,
    DecodeResult,
    PolarCodeLevel,
    ca_scl_decode,
    polar_encode,
    polar_transform,
    sc_decode,
    scl_decode,
)
from .simulator import (
    BipcmCode,
    BlerPoint,
    Scheme,
    SimConfig,
    build_bipcm_code,
    msd_decode,
    pcm_encode_modulate,
    required_snr,
    run_bipcm_bler,
    run_bler,
)
