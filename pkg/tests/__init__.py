"""Tests for su11-metrology."""
