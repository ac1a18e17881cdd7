"""Meromorphic function expressions: parse, evaluate, locate poles, iterate."""

from .blocks import PlateauBlock, PlateauTerm, RationalBlock, RingTerm, block_from_json
from .corpus import corpus, resolve
from .expr import (EvalResult, FunctionExpr, as_function, evaluate, evaluate_array,
                   function_from_json, load_function, log_abs, parse_function, save_function)
from .nodes import PointPole, RayPoles, RingPoles
from .orbit import OrbitRecord, iterate_orbit
from .parser import ParseError
from .poles import (PoleList, PreconditionError, check_registry, counting, integrated_counting,
                    is_entire, is_transcendental, poles_within, require_transcendental,
                    winding_number)

__all__ = [
    "EvalResult", "FunctionExpr", "OrbitRecord", "ParseError", "PlateauBlock", "PlateauTerm",
    "PointPole", "PoleList", "PreconditionError", "RationalBlock", "RayPoles", "RingPoles",
    "RingTerm", "as_function", "block_from_json", "check_registry", "corpus", "counting",
    "evaluate", "evaluate_array", "function_from_json", "integrated_counting", "is_entire",
    "is_transcendental", "iterate_orbit", "load_function", "log_abs", "parse_function",
    "poles_within", "require_transcendental", "resolve", "save_function", "winding_number",
]
