# Tests for lattice-nls
