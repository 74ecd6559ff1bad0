"""Run configuration, check registry, run engine and model tables behind the belab CLI."""
