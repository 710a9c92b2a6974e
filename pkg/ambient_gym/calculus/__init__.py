from .parser import Model, ParseError, parse_model, parse_process, pretty
from .typesystem import CheckReport, GroupTypeError, TypeEnv, check_model, type_process
from .runtime import (
    Error, Next, Redex, Rule, RuntimeState, TraceRecord, apply_redex, canonicalize, enumerate_redexes,
    successors, type_state,
)
from .explorer import (
    Bounds, ExplorationRefused, StateGraph, TheoremReport, explore, export_graph, verify_subject_reduction,
)
