from .risk import value_at_risk, conditional_value_at_risk, tail_metrics
from .bounds import BoundReport, estimate_bounds
from .hedging import HedgeReport, hedging_errors, delta_ratio
from .regions import RegionExport, export_regions
