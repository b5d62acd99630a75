"""Tests for the graft toy."""
