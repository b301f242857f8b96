"""Three-valued policy algebra with an XACML front end."""

from .kernel import Decision, DecisionPair, TriValue, classify
from .policy import parse_policy, print_policy
from .schema import AttributeSchema, parse_request, parse_schema
from .semantics import decide, eval_abs, eval_rel
from .xacml import parse_xacml, translate

__all__ = ["Decision", "DecisionPair", "TriValue", "classify", "parse_policy", "print_policy",
           "AttributeSchema", "parse_request", "parse_schema", "decide", "eval_abs", "eval_rel",
           "parse_xacml", "translate"]
__version__ = "0.1.0"
