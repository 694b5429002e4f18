"""Tests for the quantitative algebra workbench."""
