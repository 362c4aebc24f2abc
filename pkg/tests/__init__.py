"""Tests for the nltorsion solvers and experiments"""
