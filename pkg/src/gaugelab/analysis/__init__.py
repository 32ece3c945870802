"""Analysis: gauge condition, probability-flow integration and intrinsic dimension."""
