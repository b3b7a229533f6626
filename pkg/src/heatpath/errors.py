class HeatpathError(Exception):
    exit_code = 1


class ConfigError(HeatpathError, ValueError):
    exit_code = 2


class NumericalError(HeatpathError, ArithmeticError):
    exit_code = 3


class PSDError(NumericalError):
    def __init__(self, message, minor=None):
        super().__init__(message)
        self.minor = minor


class QuadratureError(NumericalError):
    pass
