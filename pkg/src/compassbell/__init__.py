"""Deterministic driven-compass model of EPRB/CHSH experiments."""
