"""
Model selection by estimated speedup
"""

from .speedup import (SpeedupEstimate, speedup_formula, estimate_speedup, select_model,
                      selection_frame, write_selection_report, format_selection_report, selection_rows)

__all__ = ['SpeedupEstimate', 'speedup_formula', 'estimate_speedup', 'select_model',
           'selection_frame', 'write_selection_report', 'format_selection_report', 'selection_rows']
