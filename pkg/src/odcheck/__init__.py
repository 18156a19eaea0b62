"""odcheck: a stateless model checker for observational determinism.

Small multithreaded programs in a toy imperative language are re-executed
under every thread schedule and every initial assignment of their high
(secret) variables. The low-store changes of the first execution form a
signature; every other execution must produce the same change sequence, or
the program leaks information through its public variables or its
scheduling. A brute-force oracle cross-validates the verifier.
"""

from .errors import (
    BoundExceededError,
    CategoryError,
    CheckerError,
    CorruptSignatureError,
    EvalOverflowError,
    InfeasibleScheduleError,
    NotEnabledError,
    ParseError,
    SignatureError,
    ValidationError,
    VerificationError,
)
from .executor import (
    ExecState,
    Granularity,
    RunOutcome,
    RunResult,
    StepEvent,
    enabled,
    initial_state,
    run_schedule,
    step,
)
from .explorer import (
    Category,
    ExplorationStats,
    Iteration,
    IterationOutcome,
    explore,
    replay,
)
from .lang import Program, SecurityLabel, VarDecl, label_of, parse, render, validate
from .monitor import ChangeEvent, LowStore, low_equivalent, low_store_of, observe
from .oracle import (
    CollapsedTrace,
    OracleReport,
    all_low_traces,
    check_program,
    stutter_collapse,
    stutter_equivalent,
)
from .sigstore import ChangeRecord, Signature, SignatureStore, load_signature, save_signature
from .verifier import (
    CategoryResult,
    CategoryVerdict,
    SecurityReport,
    Verdict,
    ViolationDetail,
    ViolationKind,
    ViolationWitness,
    build_signature,
    check_iteration,
    reconstruct_pattern,
    report_to_dict,
    verify_category,
    verify_program,
)

__version__ = "0.1.0"
