"""Model files and exported artifacts (reports, loss traces, heatmaps)."""
