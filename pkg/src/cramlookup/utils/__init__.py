"""Utility modules for bit manipulation and report rendering."""
