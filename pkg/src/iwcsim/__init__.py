"""Feedback-assisted application-layer erasure coding for delay-sensitive IoT uplinks."""
