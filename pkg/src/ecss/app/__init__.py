"""Scene files, OBJ import, benchmarks and the ``ecss`` command line."""
