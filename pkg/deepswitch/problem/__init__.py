from .expressions import Expression
from .problem import SwitchingProblem, TriangularReport, triangular_report, validate_triangular
from .payoffs import PayoffTables, evaluate_payoffs
