"""Test package for su2_polarimetry."""
