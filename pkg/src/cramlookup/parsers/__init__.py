"""Readers and writers for routing tables and structure artifacts."""
