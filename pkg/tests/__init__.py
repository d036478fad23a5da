"""Test suite for mckv.

This package contains all tests for the mckv hitting-time McKean-Vlasov lab.
"""
