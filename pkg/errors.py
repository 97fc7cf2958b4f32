"""
錯誤類別
所有錯誤皆繼承 ChoiMetricError（ValueError 子類），附帶診斷資料
"""


class ChoiMetricError(ValueError):
    """基底錯誤"""

    def __init__(self, message: str = "", **details):
        super().__init__(message)
        self.details = details

    def __getattr__(self, name):
        details = self.__dict__.get('details', {})
        if name in details:
            return details[name]
        raise AttributeError(name)


# 代數結構

class NotClosedUnderProduct(ChoiMetricError):
    pass


class NotClosedUnderAdjoint(ChoiMetricError):
    pass


class NoUnit(ChoiMetricError):
    pass


class LinearlyDependentBasis(ChoiMetricError):
    pass


class NotATensorAlgebra(ChoiMetricError):
    pass


class FactorMismatch(ChoiMetricError):
    pass


class AlgebraMismatch(ChoiMetricError):
    pass


# 泛函與跡

class NotATrace(ChoiMetricError):
    pass


class NotFaithful(ChoiMetricError):
    pass


class TraceMismatch(ChoiMetricError):
    pass


# 通道

class NotMatrixUnitsBasis(ChoiMetricError):
    pass


class NotTraceChannel(ChoiMetricError):
    """failed 屬性列出未通過的判定"""
    pass


# 幾何

class InvalidTriple(ChoiMetricError):
    pass


class GradingMissing(InvalidTriple):
    pass


class GradingUnexpected(InvalidTriple):
    pass


class SeminormNotCommutatorForm(ChoiMetricError):
    pass


# 度量

class SolverDivergence(ChoiMetricError):
    pass


class Infeasible(ChoiMetricError):
    pass


class HeuristicNonConvergence(ChoiMetricError):
    pass


# 群

class InvalidGroup(ChoiMetricError):
    pass


class InvalidCocycle(ChoiMetricError):
    pass


class InvalidLength(ChoiMetricError):
    pass


class NotPositiveDefinite(ChoiMetricError):
    pass


# 輸入檔案

class InputFileError(ChoiMetricError):
    """檔案讀取或格式錯誤，附檔名與行號"""

    def __init__(self, message: str = "", path: str = "", line: int = 0, **details):
        location = f"{path}:{line}" if line else path
        super().__init__(f"{location}: {message}" if location else message,
                         path=path, line=line, **details)
