"""Tests for the matscreen package."""
