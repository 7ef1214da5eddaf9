"""evoshader: interactive evolutionary breeding of audio-reactive
GLSL fragment shaders, with LLM-backed semantic mutation and crossover.
"""

from .audio import (
    AudioFeatureTimeline,
    BandSpectrum,
    PcmClip,
    RunningMax,
    band_spectrum,
    energy,
    feature_timeline,
    normalize_feature,
    read_wav,
)
from .evolution import (
    EvolveConfig,
    EvolveOutcome,
    FirstSlotPolicy,
    RandomSubsetPolicy,
    autopilot_step,
    evolve_step,
    initialize,
)
from .genome import (
    IdAllocator,
    LineageRecord,
    Population,
    SelectionPartition,
    ShaderGenome,
    new_population,
    partition,
    set_selected,
)
from .glsl import (
    AcceptingBackend,
    NativeBackend,
    RejectingBackend,
    SanitizedShader,
    ValidationLimits,
    ValidationReport,
    WrappedShader,
    compile_check,
    sanitize,
    structural_validate,
    validate_candidate,
    wrap_interface,
)
from .operators import (
    OffspringResult,
    ProviderConfig,
    build_crossover_prompt,
    build_mutation_prompt,
    generate_valid_offspring,
    load_template,
    request_variant,
)
from .providers import (
    DeterministicShaderProvider,
    FlakyProvider,
    OpenAIChatProvider,
    ReplayProvider,
    ScriptedProvider,
)
from .seedbank import load_seed_bank
from .store import SessionSnapshot, export_selected, load_session, save_session

__version__ = "0.1.0"
