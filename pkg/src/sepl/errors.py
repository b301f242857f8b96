"""Exception hierarchy shared by every sepl module."""


class SeplError(Exception):
    """Base class for all errors raised by sepl."""


class InputError(SeplError):
    """Malformed or inconsistent user input, optionally with a location."""

    def __init__(self, message, line=None, column=None, source=None):
        self.message = message
        self.line = line
        self.column = column
        self.source = source
        super().__init__(self._render())

    def _render(self):
        where = []
        if self.source:
            where.append(str(self.source))
        if self.line is not None:
            where.append(str(self.line))
            if self.column is not None:
                where.append(str(self.column))
        prefix = ":".join(where)
        return f"{prefix}: {self.message}" if prefix else self.message

    def with_source(self, source):
        return type(self)(self.message, self.line, self.column, source)


class SyntaxError_(InputError):
    """Concrete-syntax error in a .sepl, schema, request or condition text."""


class SchemaError(InputError):
    """Schema violation: unknown key, value outside a domain, bad predicate."""


class EmptyDomain(SchemaError):
    pass


class DuplicateAttribute(SchemaError):
    pass


class XacmlError(InputError):
    """Document outside the supported XACML subset."""


class UnknownAlgorithm(XacmlError):
    pass


class CapExceeded(SeplError):
    """A point or box count went over its configured cap."""


class NonDisjointTarget(SeplError):
    """The two set expressions handed to semantics_to_policy overlap."""

    def __init__(self, message, point=None):
        self.point = point
        super().__init__(message)
