# Evaluation module
from .metrics import METRICS_FIELDS, Metrics, appendMetrics, entityAccuracy, hitsAt1, metricsRows
from .datasetReport import REPORT_FIELDS, datasetRegime, datasetReport, newEntityRatio, newPairRatio
