"""Exact chip-firing on metric graphs with transfinite greedy reduction."""
