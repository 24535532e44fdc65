"""
ADSALA GEMM - Source Package

Install-time trained thread-count selection for multi-threaded SGEMM.
"""
