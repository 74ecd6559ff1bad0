"""Theorem checks: each one returns a VerificationReport with both sides of its inequality."""
