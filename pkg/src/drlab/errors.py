"""Exception types shared across the package."""


class DrlabError(Exception):
    pass


class IncompatibleError(DrlabError):
    """Operands have different rank or truncation policy."""


class ExactnessError(DrlabError):
    """A polynomial expected to be a total x-derivative is not one.

    ``witness`` holds the offending variational derivatives (component -> poly).
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness or {}


class WeightResonanceError(DrlabError):
    def __init__(self, message, monomials=None):
        super().__init__(message)
        self.monomials = monomials


class NotDrTypeError(DrlabError):
    def __init__(self, message, witness=None, index=None):
        super().__init__(message)
        self.witness = witness
        self.index = index


class StringObstructionError(NotDrTypeError):
    pass


class NotTauCompatibleError(DrlabError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class InvalidTransformError(DrlabError):
    pass


class InvalidMoveError(DrlabError):
    pass


class CapExceededError(DrlabError):
    pass


class ParseError(DrlabError, ValueError):
    pass
