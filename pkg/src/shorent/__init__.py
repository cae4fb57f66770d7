"""Shor order-finding simulator with entanglement analytics."""
