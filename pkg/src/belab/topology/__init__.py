"""Volume, generator and Betti bounds, word growth counts and the horizon topology report."""
