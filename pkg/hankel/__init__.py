# Hankel operators for vectors and multi-coil blocks
