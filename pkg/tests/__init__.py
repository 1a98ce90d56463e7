# Tests package for uddpy
