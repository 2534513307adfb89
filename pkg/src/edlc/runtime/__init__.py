"""Grid storage, tiled kernel execution, time integration and diagnostics."""
